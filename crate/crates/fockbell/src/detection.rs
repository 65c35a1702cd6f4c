//! Pixel-level detection model: time-dependent coincidence accumulation,
//! wavefront alignment and mismatch, and configuration-counting factors.
//!
//! Detectors are tiled into pixels. Each pixel j carries a fixed relative
//! phase phi_j between the two incident waves and a coupling profile
//! p_j(t) that grows from 0 to a saturation value pbar_j. The accumulated
//! probability that one particle has fired each pixel of a given set is a
//! double phase average
//!
//! ```text
//! P(t) = prod_j p_j(t) * CT[ cos(d*Lam) * prod_j (cos Lam + cos(phi_j - mu)) ]
//! ```
//!
//! with d the source imbalance and CT the constant term in (mu, Lam).
//! When all pixels of one detector share the phase of its output port
//! (-zeta, -zeta+pi, theta, theta+pi for the four ports) the integrand is
//! the same one the exact engine integrates, so pixel-level results are
//! proportional to the port-level probabilities with one global constant.
//! Tilting individual pixel phases breaks that proportionality, which is
//! exactly the fringe-contrast cost of wavefront mismatch.

use std::collections::BTreeMap;

use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::rat_to_f64;
use crate::model::{parity, AngleSettings, OutcomeCounts, SourceSpec, Support};

/// Laurent polynomial in two phase variables (mu, Lam) with float
/// coefficients; keys are the exponent pairs. Ordered storage keeps the
/// accumulation order, and with it every emitted float, run-reproducible.
#[derive(Debug, Clone, Default)]
struct CPoly2 {
    terms: BTreeMap<(i16, i16), Complex64>,
}

impl CPoly2 {
    fn one() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((0, 0), Complex64::new(1.0, 0.0));
        Self { terms }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = BTreeMap::new();
        for (&(a, b), &c) in &self.terms {
            for (&(x, y), &d) in &other.terms {
                *out.entry((a + x, b + y))
                    .or_insert(Complex64::new(0.0, 0.0)) += c * d;
            }
        }
        Self { terms: out }
    }

    fn coeff(&self, key: (i16, i16)) -> Complex64 {
        self.terms
            .get(&key)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }
}

/// One pixel: its fixed two-wave relative phase and saturation coupling.
#[derive(Debug, Clone, Copy)]
pub struct Pixel {
    pub phase: f64,
    pub pbar: f64,
}

/// A tiling of the four detectors into pixels, with a shared linear
/// coupling profile p_j(t) = pbar_j * clamp(t/t_end, 0, 1) and a common
/// pixel area entering as an overall scale per fired pixel.
#[derive(Debug, Clone)]
pub struct PixelModel {
    detectors: [Vec<Pixel>; 4],
    t_end: f64,
    area: f64,
}

impl PixelModel {
    pub fn new(detectors: [Vec<Pixel>; 4], t_end: f64) -> Self {
        assert!(t_end > 0.0, "t_end must be positive");
        Self {
            detectors,
            t_end,
            area: 1.0,
        }
    }

    /// Perfectly aligned tiling: every pixel of a detector carries that
    /// output port's phase (-zeta, -zeta+pi, theta, theta+pi), uniform
    /// saturation coupling pbar.
    pub fn aligned(angles: &AngleSettings, pixels_per_detector: usize, pbar: f64) -> Self {
        let port_phase = [
            -angles.zeta(),
            -angles.zeta() + std::f64::consts::PI,
            angles.theta(),
            angles.theta() + std::f64::consts::PI,
        ];
        let detectors = port_phase.map(|phase| {
            (0..pixels_per_detector)
                .map(|_| Pixel { phase, pbar })
                .collect()
        });
        Self::new(detectors, 1.0)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn set_area(&mut self, area: f64) {
        self.area = area;
    }

    pub fn detectors(&self) -> &[Vec<Pixel>; 4] {
        &self.detectors
    }

    pub fn detectors_mut(&mut self) -> &mut [Vec<Pixel>; 4] {
        &mut self.detectors
    }

    /// Pixels available per detector (the smallest detector's count).
    pub fn q_pix(&self) -> usize {
        self.detectors.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// The pixel picture assumes many more pixels than particle pairs;
    /// require q_pix >= 100 N^2 before trusting configuration counting.
    pub fn meets_pixel_budget(&self, n: u32) -> bool {
        self.q_pix() >= 100 * (n as usize).pow(2)
    }

    pub fn pixel_budget_warning(&self, n: u32) -> Option<String> {
        if self.meets_pixel_budget(n) {
            None
        } else {
            Some(format!(
                "pixel budget {} below 100*N^2 = {} for N={}; configuration counting is unreliable",
                self.q_pix(),
                100 * (n as usize).pow(2),
                n
            ))
        }
    }

    /// Coupling accumulated by time t (linear ramp, saturates at t_end).
    fn profile(&self, pixel: &Pixel, t: f64) -> f64 {
        pixel.pbar * (t / self.t_end).clamp(0.0, 1.0)
    }
}

/// One fired pixel per detected particle, listed as pixel indices per
/// detector. The list length for detector j is the count m_j.
pub type PixelAssignment = [Vec<usize>; 4];

/// First m_j pixels of each detector; the reference assignment used by
/// sweeps and checks.
pub fn canonical_assignment(outcome: &OutcomeCounts) -> PixelAssignment {
    let m = outcome.counts();
    [
        (0..m[0] as usize).collect(),
        (0..m[1] as usize).collect(),
        (0..m[2] as usize).collect(),
        (0..m[3] as usize).collect(),
    ]
}

fn validate_assignment(model: &PixelModel, assignment: &PixelAssignment) -> Result<()> {
    for (det, picks) in assignment.iter().enumerate() {
        let count = model.detectors[det].len();
        let mut seen = std::collections::HashSet::new();
        for &idx in picks {
            if idx >= count {
                return Err(Error::PixelOutOfRange { idx, count });
            }
            if !seen.insert(idx) {
                return Err(Error::DuplicatePixel(idx));
            }
        }
    }
    Ok(())
}

/// Accumulated probability at time t that exactly the assigned pixels
/// have each caught one particle, for sources (n_alpha, n_beta).
///
/// The double constant term is extracted exactly from the expanded
/// Laurent polynomial; only the coupling profiles carry the time
/// dependence, so with the linear ramp the result grows as t^N.
pub fn accumulated_probability(
    model: &PixelModel,
    assignment: &PixelAssignment,
    n_alpha: u32,
    n_beta: u32,
    t: f64,
) -> Result<f64> {
    if !(0.0..=model.t_end).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            t_end: model.t_end,
        });
    }
    validate_assignment(model, assignment)?;
    let fired: usize = assignment.iter().map(Vec::len).sum();
    let n = n_alpha + n_beta;
    if fired != n as usize {
        return Err(Error::OutcomeTotal {
            got: fired as u32,
            expected: n,
        });
    }

    let mut coupling = 1.0;
    let mut poly = CPoly2::one();
    for (det, picks) in assignment.iter().enumerate() {
        for &idx in picks {
            let pixel = &model.detectors[det][idx];
            coupling *= model.area * model.profile(pixel, t);
            // cos Lam + cos(phi - mu)
            let mut factor = CPoly2::default();
            factor.terms.insert((0, 1), Complex64::new(0.5, 0.0));
            factor.terms.insert((0, -1), Complex64::new(0.5, 0.0));
            let rot = Complex64::new(0.0, pixel.phase).exp();
            factor.terms.insert((-1, 0), rot * 0.5);
            factor.terms.insert((1, 0), rot.conj() * 0.5);
            poly = poly.mul(&factor);
        }
    }
    let d = (n_beta as i32 - n_alpha as i32) as i16;
    let ct = 0.5 * (poly.coeff((0, d)) + poly.coeff((0, -d)));
    Ok(coupling * ct.re)
}

/// How far the pixel model sits from strict proportionality to the
/// port-level engine: the max relative spread of the per-outcome ratio
/// accumulated(T_end) / (prod m_j! * engine probability), over all
/// outcomes with the canonical assignment. Perfect alignment gives a
/// constant ratio and a deviation at rounding level.
pub fn aligned_limit_check(
    model: &PixelModel,
    source: &SourceSpec,
    angles: &AngleSettings,
) -> Result<f64> {
    let map = crate::model::build_network(
        crate::model::Geometry::TwoSourceFour,
        *angles,
        &crate::model::LossSpec::none(),
    )?;
    let n = source.total();
    let counts = source.counts();
    let mut ratios: Vec<(f64, f64)> = Vec::new();
    for outcome in Support::FixedTotal(n).outcomes(4) {
        let assignment = canonical_assignment(&outcome);
        let acc = accumulated_probability(model, &assignment, counts[0], counts[1], model.t_end)?;
        let p = crate::engine::probability(&map, source, &outcome)?;
        let w = rat_to_f64(&outcome.perm_factor()) * p;
        ratios.push((acc, w));
    }
    let w_max = ratios.iter().map(|&(_, w)| w).fold(0.0, f64::max);
    let mut c_ref = 0.0;
    let mut mass = 0.0;
    for &(acc, w) in &ratios {
        c_ref += acc;
        mass += w;
    }
    c_ref /= mass;
    let mut dev: f64 = 0.0;
    for &(acc, w) in &ratios {
        if w > 1e-12 * w_max {
            dev = dev.max((acc / w / c_ref - 1.0).abs());
        } else {
            // A vanishing port probability must vanish at pixel level too.
            dev = dev.max((acc - c_ref * w).abs() / (c_ref * w_max));
        }
    }
    Ok(dev)
}

/// How the exact and asymptotic pixel-configuration counts are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountingMode {
    /// ln C(Q, m1) + ln C(Q, m2): each detector picks which of its Q
    /// pixels fired.
    Exact,
    /// Leading order for Q >> m: (m1+m2) ln Q - ln m1! - ln m2!.
    Stirling,
}

/// Log of the number of pixel configurations that yield counts (m1, m2)
/// on the two detectors of one apparatus with Q pixels each.
pub fn counting_factor(q: u64, m1: u32, m2: u32, mode: CountingMode) -> Result<f64> {
    if u64::from(m1) + u64::from(m2) > q {
        return Err(Error::CountsExceedPixels {
            m1: u64::from(m1),
            m2: u64::from(m2),
            q,
        });
    }
    let ln_fact = |m: u32| -> f64 { (2..=u64::from(m)).map(|k| (k as f64).ln()).sum() };
    match mode {
        CountingMode::Exact => {
            let ln_choose = |m: u32| -> f64 {
                (0..u64::from(m)).map(|k| ((q - k) as f64).ln()).sum::<f64>() - ln_fact(m)
            };
            Ok(ln_choose(m1) + ln_choose(m2))
        }
        CountingMode::Stirling => {
            Ok(f64::from(m1 + m2) * (q as f64).ln() - ln_fact(m1) - ln_fact(m2))
        }
    }
}

/// Deterministic per-pixel phase-jitter patterns for mismatch sweeps.
#[derive(Debug, Clone, Copy)]
pub enum JitterPattern {
    /// +sigma/2 on even pixel indices, -sigma/2 on odd ones.
    Alternating,
    /// Per-pixel offsets sigma * u with u drawn once from [-1/2, 1/2]
    /// by a seeded generator; the pattern is fixed across the sweep and
    /// only its scale changes.
    Seeded(u64),
}

/// One point of a mismatch sweep: jitter spread and the parity
/// correlator it leaves.
#[derive(Debug, Clone, Copy)]
pub struct MismatchPoint {
    pub sigma: f64,
    pub correlator: f64,
}

impl MismatchPoint {
    pub fn magnitude(&self) -> f64 {
        self.correlator.abs()
    }
}

/// Parity correlator of the pixel model versus phase-jitter spread.
///
/// For each sigma the aligned tiling is perturbed by the pattern, every
/// outcome of total N is weighted by its canonical-assignment
/// accumulated probability over prod m_j!, and the A*B parity average is
/// taken. sigma = 0 reproduces the port-level correlator
/// cos^N((zeta+theta)/2).
pub fn mismatch_sweep(
    source: &SourceSpec,
    angles: &AngleSettings,
    sigmas: &[f64],
    pattern: JitterPattern,
) -> Result<Vec<MismatchPoint>> {
    let n = source.total();
    let counts = source.counts();
    let base = PixelModel::aligned(angles, n as usize, 1.0);
    // The unit pattern is drawn once; sigma only scales it.
    let unit: [Vec<f64>; 4] = match pattern {
        JitterPattern::Alternating => base.detectors.clone().map(|pixels| {
            (0..pixels.len())
                .map(|k| if k % 2 == 0 { 0.5 } else { -0.5 })
                .collect()
        }),
        JitterPattern::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            base.detectors
                .clone()
                .map(|pixels| (0..pixels.len()).map(|_| rng.gen::<f64>() - 0.5).collect())
        }
    };
    let mut out = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let mut model = base.clone();
        for det in 0..4 {
            for (pixel, u) in model.detectors[det].iter_mut().zip(&unit[det]) {
                pixel.phase += sigma * u;
            }
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for outcome in Support::FixedTotal(n).outcomes(4) {
            let assignment = canonical_assignment(&outcome);
            let acc =
                accumulated_probability(&model, &assignment, counts[0], counts[1], model.t_end)?;
            let w = acc / rat_to_f64(&outcome.perm_factor());
            let (pa, pb) = parity(&outcome);
            num += f64::from(pa) * f64::from(pb) * w;
            den += w;
        }
        out.push(MismatchPoint {
            sigma,
            correlator: num / den,
        });
    }
    Ok(out)
}
