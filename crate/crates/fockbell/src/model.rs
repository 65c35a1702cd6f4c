//! Shared domain model: sources, settings, losses, network geometries, and
//! outcome bookkeeping.
//!
//! A network is a linear map from source modes to output modes. Every
//! geometry in this crate has output rows of the form
//! `sqrt(scale2) * sum_s g_{js} a_s` where `scale2` is a positive rational
//! and each `g_{js}` is a Gaussian-rational times a setting-phase monomial.
//! Keeping the radical confined to a single positive factor per row is what
//! lets all downstream probability algebra stay exactly rational.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{gauss, rat, rat_from_f64, Exact, Rat};
use crate::poly::{PhasePoly, CHI, THETA, ZETA};

/// Independent Fock-state sources: two condensates for the four-channel
/// networks, three for the six-channel one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpec {
    counts: [u32; 3],
    n_sources: usize,
}

impl SourceSpec {
    pub fn two(n_alpha: u32, n_beta: u32) -> Self {
        Self {
            counts: [n_alpha, n_beta, 0],
            n_sources: 2,
        }
    }

    pub fn three(n_alpha: u32, n_beta: u32, n_gamma: u32) -> Self {
        Self {
            counts: [n_alpha, n_beta, n_gamma],
            n_sources: 3,
        }
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    /// Occupation numbers, one per source.
    pub fn counts(&self) -> &[u32] {
        &self.counts[..self.n_sources]
    }

    /// Total particle number N.
    pub fn total(&self) -> u32 {
        self.counts().iter().sum()
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, c) in self.counts().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ">")
    }
}

fn reduce_angle(x: f64) -> f64 {
    // Map to [-pi, pi). rem_euclid keeps the result stable near the seam.
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Interferometer setting phases, reduced to [-pi, pi).
///
/// `chi` is present only for three-source geometries; the two-source
/// constructors leave it unset so misuse fails loudly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSettings {
    zeta: f64,
    theta: f64,
    chi: Option<f64>,
}

impl AngleSettings {
    pub fn new(zeta: f64, theta: f64) -> Self {
        Self {
            zeta: reduce_angle(zeta),
            theta: reduce_angle(theta),
            chi: None,
        }
    }

    pub fn with_chi(zeta: f64, theta: f64, chi: f64) -> Self {
        Self {
            zeta: reduce_angle(zeta),
            theta: reduce_angle(theta),
            chi: Some(reduce_angle(chi)),
        }
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn chi(&self) -> Option<f64> {
        self.chi
    }
}

/// Where particles are removed, if anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    #[default]
    None,
    /// Beamsplitters just after the sources divert particles before the
    /// interferometer proper.
    AtSources,
    /// Each detector channel is split once more; the extra channels go
    /// unobserved.
    AtDetectors,
}

/// Loss model: each particle independently survives with probability `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    t: f64,
    t_rat: Rat,
    placement: Placement,
}

impl LossSpec {
    pub fn none() -> Self {
        Self {
            t: 1.0,
            t_rat: Rat::one(),
            placement: Placement::None,
        }
    }

    /// Transmission `t` in [0,1]. The float is converted bit-exactly to a
    /// rational so that both loss placements run on identical arithmetic.
    pub fn new(t: f64, placement: Placement) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) || !t.is_finite() {
            return Err(Error::InvalidTransmission(t));
        }
        Ok(Self {
            t,
            t_rat: rat_from_f64(t),
            placement,
        })
    }

    pub fn transmission(&self) -> f64 {
        self.t
    }

    pub fn transmission_rat(&self) -> Rat {
        self.t_rat.clone()
    }

    /// Reflection 1 - t, exact.
    pub fn reflection_rat(&self) -> Rat {
        Rat::one() - &self.t_rat
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn is_lossless(&self) -> bool {
        self.placement == Placement::None || self.t_rat.is_one()
    }
}

/// Network geometry tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    /// Two sources, two final beamsplitters, four detectors.
    TwoSourceFour,
    /// Same interferometer with loss beamsplitters at the sources.
    SourceLoss,
    /// Same interferometer with each detector channel split once more.
    DetectorLoss,
    /// Three sources, six detectors.
    ThreeSourceSix,
    /// Central splitter followed by two apparatuses, unprimed/unprimed.
    HardyDD,
    /// First apparatus unprimed, second primed.
    HardyDDp,
    /// First apparatus primed, second unprimed.
    HardyDpD,
    /// Both apparatuses primed (detectors straight after the splitter).
    HardyDpDp,
}

impl Geometry {
    pub const ALL: [Geometry; 8] = [
        Geometry::TwoSourceFour,
        Geometry::SourceLoss,
        Geometry::DetectorLoss,
        Geometry::ThreeSourceSix,
        Geometry::HardyDD,
        Geometry::HardyDDp,
        Geometry::HardyDpD,
        Geometry::HardyDpDp,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Geometry::TwoSourceFour => "fig1",
            Geometry::SourceLoss => "fig2-source-loss",
            Geometry::DetectorLoss => "fig2-2-detector-loss",
            Geometry::ThreeSourceSix => "fig3-ghz",
            Geometry::HardyDD => "fig4-hardy-DD",
            Geometry::HardyDDp => "fig4-hardy-DD'",
            Geometry::HardyDpD => "fig4-hardy-D'D",
            Geometry::HardyDpDp => "fig4-hardy-D'D'",
        }
    }

    pub fn n_sources(&self) -> usize {
        match self {
            Geometry::ThreeSourceSix => 3,
            _ => 2,
        }
    }

    pub fn n_detectors(&self) -> usize {
        match self {
            Geometry::ThreeSourceSix => 6,
            _ => 4,
        }
    }

    /// Whether the tag takes a third setting angle.
    pub fn needs_chi(&self) -> bool {
        matches!(self, Geometry::ThreeSourceSix)
    }

    fn required_placement(&self) -> Placement {
        match self {
            Geometry::SourceLoss => Placement::AtSources,
            Geometry::DetectorLoss => Placement::AtDetectors,
            _ => Placement::None,
        }
    }
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Geometry::ALL
            .iter()
            .find(|g| g.tag() == s)
            .copied()
            .ok_or_else(|| Error::UnknownGeometry(s.to_string()))
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One output mode: `sqrt(scale2) * sum_s g[s] a_s`, with `g[s]` a
/// single-monomial polynomial in the setting angles (or zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scale2: Rat,
    pub g: Vec<PhasePoly>,
}

impl Row {
    fn new(scale2: Rat, g: Vec<PhasePoly>) -> Self {
        Self { scale2, g }
    }

    /// The full mode operator as a polynomial in source markers: detector
    /// row j maps to `sum_s g[s] e^{i v_s}` (the sqrt prefactor is carried
    /// separately as `scale2`).
    pub fn combination(&self) -> PhasePoly {
        let mut acc = PhasePoly::zero();
        for (s, gs) in self.g.iter().enumerate() {
            acc.add_assign(&gs.mul(&PhasePoly::unit(s)));
        }
        acc
    }
}

/// A built network: detector rows, optional unobserved (diverted) rows, and
/// the per-source survival weight the detector columns must reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMap {
    pub kind: Geometry,
    pub angles: AngleSettings,
    /// Observed detector modes, in channel order 1..J.
    pub rows: Vec<Row>,
    /// Diverted modes (loss channels); empty for lossless geometries.
    pub hidden: Vec<Row>,
    /// Expected squared column norm of the detector rows alone: 1 for a
    /// lossless network, the transmission for a lossy one.
    pub survival: Rat,
}

impl OutputMap {
    pub fn n_detectors(&self) -> usize {
        self.rows.len()
    }

    pub fn n_sources(&self) -> usize {
        self.kind.n_sources()
    }

    /// The unitary completion: detector rows followed by diverted rows.
    /// Columns of the extended map are exactly orthonormal.
    pub fn extended(&self) -> OutputMap {
        let mut rows = self.rows.clone();
        rows.extend(self.hidden.iter().cloned());
        OutputMap {
            kind: self.kind,
            angles: self.angles,
            rows,
            hidden: Vec::new(),
            survival: Rat::one(),
        }
    }

    /// Test hook: add `eps` to the real part of coefficient `g[row][source]`
    /// so that orthonormality checks can be shown to catch perturbations.
    pub fn perturb(&mut self, row: usize, source: usize, eps: Rat) {
        let bump = PhasePoly::constant(Exact::new(eps, Rat::zero()));
        self.rows[row].g[source].add_assign(&bump);
    }
}

/// Result of a column-orthonormality check.
#[derive(Debug, Clone)]
pub struct OrthCheck {
    pub ok: bool,
    /// Largest coefficient-wise deviation of the Gram matrix from
    /// `survival * identity`; exactly 0.0 for an unperturbed network.
    pub max_deviation: f64,
}

/// Verify that the detector columns satisfy
/// `sum_j scale2_j conj(g_{js}) g_{js'} = survival * delta_{ss'}`
/// identically in the setting angles. Diverted rows are excluded on
/// purpose: for a lossy network the detector columns alone must come out
/// to the transmission, which is what this confirms.
pub fn check_orthonormal(map: &OutputMap) -> OrthCheck {
    let ns = map.n_sources();
    let mut max_dev: f64 = 0.0;
    for s in 0..ns {
        for sp in 0..ns {
            let mut gram = PhasePoly::zero();
            for row in &map.rows {
                let mut term = row.g[s].conj().mul(&row.g[sp]);
                term.scale_rat(&row.scale2);
                gram.add_assign(&term);
            }
            if s == sp {
                let mut expect = PhasePoly::constant(Exact::new(map.survival.clone(), Rat::zero()));
                expect.scale(&gauss(-1, 0));
                gram.add_assign(&expect);
            }
            max_dev = max_dev.max(gram.deviation());
        }
    }
    OrthCheck {
        ok: max_dev == 0.0,
        max_deviation: max_dev,
    }
}

fn phase(dim: usize) -> PhasePoly {
    PhasePoly::unit(dim)
}

fn times_i(p: &PhasePoly) -> PhasePoly {
    let mut q = p.clone();
    q.scale(&gauss(0, 1));
    q
}

fn neg(p: &PhasePoly) -> PhasePoly {
    let mut q = p.clone();
    q.scale(&gauss(-1, 0));
    q
}

fn c(a: i64, b: i64) -> PhasePoly {
    PhasePoly::constant(gauss(a, b))
}

/// The four interferometer rows shared by the plain and lossy two-source
/// networks, up to an overall scale: channels 1,2 mix the sources with the
/// first setting phase, channels 3,4 with the second.
fn interferometer_core(scale2: Rat) -> Vec<Row> {
    let zeta = phase(ZETA);
    let theta = phase(THETA);
    vec![
        Row::new(scale2.clone(), vec![times_i(&zeta), c(0, 1)]),
        Row::new(scale2.clone(), vec![neg(&zeta), c(1, 0)]),
        Row::new(scale2.clone(), vec![c(0, 1), times_i(&theta)]),
        Row::new(scale2, vec![c(1, 0), neg(&theta)]),
    ]
}

/// Build the output map for a geometry at the given settings.
///
/// The loss spec must match the geometry: the lossy tags require their
/// placement and a transmission; every other tag requires no loss.
pub fn build_network(kind: Geometry, angles: AngleSettings, loss: &LossSpec) -> Result<OutputMap> {
    if kind.needs_chi() != angles.chi().is_some() {
        let reason = if kind.needs_chi() {
            "three-source geometry needs a third angle chi"
        } else {
            "only the three-source geometry takes a chi angle"
        };
        return Err(Error::GeometryMismatch {
            kind: kind.tag().into(),
            reason: reason.into(),
        });
    }
    let want = kind.required_placement();
    if loss.placement() != want {
        let reason = match want {
            Placement::None => "this geometry takes no loss spec",
            Placement::AtSources => "requires loss placed at the sources",
            Placement::AtDetectors => "requires loss placed at the detectors",
        };
        return Err(Error::GeometryMismatch {
            kind: kind.tag().into(),
            reason: reason.into(),
        });
    }

    let t = loss.transmission_rat();
    let r = loss.reflection_rat();
    let quarter = rat(1, 4);

    let map = match kind {
        Geometry::TwoSourceFour => OutputMap {
            kind,
            angles,
            rows: interferometer_core(quarter),
            hidden: Vec::new(),
            survival: Rat::one(),
        },
        Geometry::SourceLoss => {
            // Each source first meets a transmission-t splitter; the
            // reflected modes are pure single-source channels.
            let rows = interferometer_core(&t * &quarter);
            let hidden = vec![
                Row::new(r.clone(), vec![c(0, 1), c(0, 0)]),
                Row::new(r, vec![c(0, 0), c(0, 1)]),
            ];
            OutputMap {
                kind,
                angles,
                rows,
                hidden,
                survival: t,
            }
        }
        Geometry::DetectorLoss => {
            // Each detector channel is split t:r; the reflected copy picks
            // up a factor i and goes unobserved.
            let rows = interferometer_core(&t * &quarter);
            let hidden = interferometer_core(&r * &quarter)
                .into_iter()
                .map(|row| Row {
                    scale2: row.scale2,
                    g: row.g.iter().map(times_i).collect(),
                })
                .collect();
            OutputMap {
                kind,
                angles,
                rows,
                hidden,
                survival: t,
            }
        }
        Geometry::ThreeSourceSix => {
            let zeta = phase(ZETA);
            let theta = phase(THETA);
            let chi = phase(CHI);
            let z = PhasePoly::zero;
            let rows = vec![
                Row::new(quarter.clone(), vec![zeta.clone(), c(0, -1), z()]),
                Row::new(quarter.clone(), vec![times_i(&zeta), c(-1, 0), z()]),
                Row::new(quarter.clone(), vec![z(), theta.clone(), c(0, -1)]),
                Row::new(quarter.clone(), vec![z(), times_i(&theta), c(-1, 0)]),
                Row::new(quarter.clone(), vec![c(-1, 0), z(), chi.clone()]),
                Row::new(quarter, vec![c(0, 1), z(), times_i(&chi)]),
            ];
            OutputMap {
                kind,
                angles,
                rows,
                hidden: Vec::new(),
                survival: Rat::one(),
            }
        }
        Geometry::HardyDD | Geometry::HardyDDp | Geometry::HardyDpD | Geometry::HardyDpDp => {
            hardy_map(kind, angles)
        }
    };
    Ok(map)
}

/// Hardy-network rows. The first source feeds the left apparatus directly;
/// the second reaches both sides through a central splitter. An unprimed
/// apparatus recombines its two inputs on a balanced splitter before its
/// detector pair; a primed apparatus detects them directly.
fn hardy_map(kind: Geometry, angles: AngleSettings) -> OutputMap {
    let dd: [(Rat, Exact, Exact); 4] = [
        (rat(1, 12), gauss(-3, 0), gauss(0, 1)),
        (rat(1, 6), gauss(0, 0), gauss(-1, 0)),
        (rat(1, 6), gauss(-1, 0), gauss(0, 0)),
        (rat(1, 12), gauss(0, 1), gauss(-3, 0)),
    ];
    let dpdp: [(Rat, Exact, Exact); 4] = [
        (rat(1, 2), gauss(0, 1), gauss(0, 0)),
        (rat(1, 4), gauss(-1, 0), gauss(0, 1)),
        (rat(1, 4), gauss(0, 1), gauss(-1, 0)),
        (rat(1, 2), gauss(0, 0), gauss(0, 1)),
    ];
    let pick = |primed_left: bool, primed_right: bool| -> Vec<Row> {
        let left = if primed_left { &dpdp } else { &dd };
        let right = if primed_right { &dpdp } else { &dd };
        let mut rows = Vec::with_capacity(4);
        for (s2, ga, gb) in &left[..2] {
            rows.push(Row::new(
                s2.clone(),
                vec![
                    PhasePoly::constant(ga.clone()),
                    PhasePoly::constant(gb.clone()),
                ],
            ));
        }
        for (s2, ga, gb) in &right[2..] {
            rows.push(Row::new(
                s2.clone(),
                vec![
                    PhasePoly::constant(ga.clone()),
                    PhasePoly::constant(gb.clone()),
                ],
            ));
        }
        rows
    };
    let rows = match kind {
        Geometry::HardyDD => pick(false, false),
        Geometry::HardyDDp => pick(false, true),
        Geometry::HardyDpD => pick(true, false),
        Geometry::HardyDpDp => pick(true, true),
        _ => unreachable!("not a Hardy geometry"),
    };
    OutputMap {
        kind,
        angles,
        rows,
        hidden: Vec::new(),
        survival: Rat::one(),
    }
}

/// Detector click counts, one per observed channel, in channel order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutcomeCounts {
    m: Vec<u32>,
}

impl OutcomeCounts {
    pub fn new(m: Vec<u32>) -> Self {
        Self { m }
    }

    pub fn counts(&self) -> &[u32] {
        &self.m
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.m.iter().sum()
    }

    /// Counts in the first detector pair (channels 1,2).
    pub fn m_first_pair(&self) -> u32 {
        self.m[0] + self.m[1]
    }

    /// Counts in the second detector pair (channels 3,4).
    pub fn m_second_pair(&self) -> u32 {
        self.m[2] + self.m[3]
    }

    /// Product of m_j! over all channels, as a rational.
    pub fn perm_factor(&self) -> Rat {
        let mut acc = Rat::one();
        for &mj in &self.m {
            acc *= crate::exact::factorial_rat(mj);
        }
        acc
    }
}

impl fmt::Display for OutcomeCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.m.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Parity of a detection record: +1 raised to even counts in the marked
/// channel, -1 to odd. For each apparatus the marked channel is its second
/// detector.
pub fn parity(outcome: &OutcomeCounts) -> (i8, i8) {
    let a = if outcome.counts()[1] % 2 == 0 { 1 } else { -1 };
    let b = if outcome.counts()[3] % 2 == 0 { 1 } else { -1 };
    (a, b)
}

/// Third-apparatus parity for six-channel outcomes.
pub fn parity_third(outcome: &OutcomeCounts) -> i8 {
    if outcome.counts()[5] % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Which outcomes a distribution ranges over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Support {
    /// All outcomes with sum m_j = N.
    FixedTotal(u32),
    /// Fixed counts per detector pair: m_1+m_2 = k_0, m_3+m_4 = k_1, ...
    PerPair(Vec<u32>),
}

impl Support {
    /// Enumerate the support's outcomes in lexicographic order.
    pub fn outcomes(&self, n_channels: usize) -> Vec<OutcomeCounts> {
        match self {
            Support::FixedTotal(n) => compositions(*n, n_channels)
                .into_iter()
                .map(OutcomeCounts::new)
                .collect(),
            Support::PerPair(ks) => {
                assert_eq!(n_channels, 2 * ks.len(), "pair support arity mismatch");
                let mut acc: Vec<Vec<u32>> = vec![Vec::new()];
                for &k in ks {
                    let mut next = Vec::new();
                    for prefix in &acc {
                        for pair in compositions(k, 2) {
                            let mut v = prefix.clone();
                            v.extend(pair);
                            next.push(v);
                        }
                    }
                    acc = next;
                }
                acc.sort();
                acc.into_iter().map(OutcomeCounts::new).collect()
            }
        }
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Support::FixedTotal(n) => write!(f, "total={n}"),
            Support::PerPair(ks) => {
                write!(f, "pairs=")?;
                for (i, k) in ks.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}")?;
                }
                Ok(())
            }
        }
    }
}

/// All vectors of `parts` nonnegative integers summing to `total`, in
/// lexicographic order.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in 0..=total {
            prefix.push(v);
            rec(total - v, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

/// A probability table over a fixed support, in deterministic outcome order.
#[derive(Debug, Clone)]
pub struct Distribution {
    pub support: Support,
    pub entries: Vec<(OutcomeCounts, f64)>,
}

impl Distribution {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn get(&self, outcome: &OutcomeCounts) -> Option<f64> {
        self.entries
            .iter()
            .find(|(o, _)| o == outcome)
            .map(|(_, p)| *p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_reduction() {
        let a = AngleSettings::new(3.0 * PI, -PI);
        assert!((a.zeta() - (-PI)).abs() < 1e-12 || (a.zeta() - PI).abs() < 1e-12);
        assert!(a.zeta() < PI && a.zeta() >= -PI);
        assert_eq!(a.theta(), -PI);
        assert!(a.chi().is_none());
        let b = AngleSettings::with_chi(0.1, 0.2, 7.0);
        let chi = b.chi().unwrap();
        assert!((-PI..PI).contains(&chi));
        assert!((chi - (7.0 - 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn geometry_tags_round_trip() {
        for g in Geometry::ALL {
            assert_eq!(g.tag().parse::<Geometry>().unwrap(), g);
        }
        assert!(matches!(
            "fig5".parse::<Geometry>(),
            Err(Error::UnknownGeometry(_))
        ));
    }

    #[test]
    fn all_lossless_maps_are_exactly_orthonormal() {
        let angles2 = AngleSettings::new(0.3, -1.1);
        let angles3 = AngleSettings::with_chi(0.3, -1.1, 2.0);
        for kind in Geometry::ALL {
            if kind.required_placement() != Placement::None {
                continue;
            }
            let angles = if kind.needs_chi() { angles3 } else { angles2 };
            let map = build_network(kind, angles, &LossSpec::none()).unwrap();
            let check = check_orthonormal(&map);
            assert!(check.ok, "{kind}: deviation {}", check.max_deviation);
            assert_eq!(check.max_deviation, 0.0);
        }
    }

    #[test]
    fn lossy_maps_have_survival_t_and_unitary_completion() {
        let angles = AngleSettings::new(0.4, 0.9);
        for (kind, place) in [
            (Geometry::SourceLoss, Placement::AtSources),
            (Geometry::DetectorLoss, Placement::AtDetectors),
        ] {
            let loss = LossSpec::new(0.25, place).unwrap();
            let map = build_network(kind, angles, &loss).unwrap();
            assert_eq!(map.survival, rat(1, 4));
            assert!(check_orthonormal(&map).ok);
            let full = map.extended();
            let check = check_orthonormal(&full);
            assert!(check.ok, "{kind} completion: {}", check.max_deviation);
        }
    }

    #[test]
    fn orthonormality_check_catches_perturbations() {
        let angles = AngleSettings::new(0.0, 0.0);
        let mut map = build_network(Geometry::TwoSourceFour, angles, &LossSpec::none()).unwrap();
        map.perturb(0, 0, rat(1, 1000));
        let check = check_orthonormal(&map);
        assert!(!check.ok);
        assert!(check.max_deviation > 1e-4);
    }

    #[test]
    fn mismatched_loss_placement_is_rejected() {
        let angles = AngleSettings::new(0.0, 0.0);
        let loss = LossSpec::new(0.5, Placement::AtSources).unwrap();
        assert!(build_network(Geometry::TwoSourceFour, angles, &loss).is_err());
        assert!(build_network(Geometry::DetectorLoss, angles, &loss).is_err());
        assert!(build_network(Geometry::SourceLoss, angles, &loss).is_ok());
        // chi rules
        assert!(build_network(Geometry::ThreeSourceSix, angles, &LossSpec::none()).is_err());
        let angles3 = AngleSettings::with_chi(0.0, 0.0, 0.0);
        assert!(build_network(Geometry::TwoSourceFour, angles3, &LossSpec::none()).is_err());
    }

    #[test]
    fn bad_transmission_rejected() {
        assert!(LossSpec::new(-0.1, Placement::AtSources).is_err());
        assert!(LossSpec::new(1.5, Placement::AtSources).is_err());
        assert!(LossSpec::new(f64::NAN, Placement::AtSources).is_err());
    }

    #[test]
    fn compositions_count_and_order() {
        let cs = compositions(3, 2);
        assert_eq!(cs, vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]);
        assert_eq!(compositions(4, 4).len(), 35); // C(7,3)
        let sup = Support::PerPair(vec![1, 1]).outcomes(4);
        assert_eq!(sup.len(), 4);
        assert_eq!(sup[0].counts(), &[0, 1, 0, 1]);
    }

    #[test]
    fn parity_marks_second_channel_of_each_pair() {
        let o = OutcomeCounts::new(vec![2, 1, 0, 2]);
        assert_eq!(parity(&o), (-1, 1));
        let o6 = OutcomeCounts::new(vec![0, 0, 0, 0, 1, 3]);
        assert_eq!(parity_third(&o6), -1);
    }
}
