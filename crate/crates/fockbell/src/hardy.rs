//! The Hardy-style impossibility chain.
//!
//! Two equal sources (N/2 particles each) meet on a central splitter whose
//! outputs feed two apparatuses. Each apparatus either recombines its
//! inputs once more before detecting (unprimed, D) or detects immediately
//! (primed, D'). Four measurement configurations arise: DD, DD', D'D,
//! D'D'.
//!
//! For N/2 odd the chain runs:
//!
//! 1. under DD the record (0, N/2; N/2, 0) has nonzero amplitude;
//! 2. under DD', a left record (0, N/2) forces the right record to
//!    (N/2, 0): every m_4' > 0 amplitude vanishes;
//! 3. under D'D, symmetrically, a right record (N/2, 0) forces the left
//!    record to (0, N/2);
//! 4. under D'D' the record (0, N/2; N/2, 0) is exactly impossible:
//!    its amplitude carries only even powers of each source operator.
//!
//! A local model that explains 1-3 must give the event in 4 at least the
//! probability from 1. Quantum mechanics gives it exactly zero.

use num::complex::Complex64;
use num::Zero;

use crate::error::{Error, Result};
use crate::exact::{exact_to_c64, rat_to_f64, sqrt_rat_exact, Exact, Rat};
use crate::model::{
    build_network, AngleSettings, Geometry, LossSpec, OutcomeCounts, SourceSpec, Support,
};

fn hardy_geometry(config: Geometry) -> Result<Geometry> {
    match config {
        Geometry::HardyDD | Geometry::HardyDDp | Geometry::HardyDpD | Geometry::HardyDpDp => {
            Ok(config)
        }
        other => Err(Error::GeometryMismatch {
            kind: other.tag().into(),
            reason: "not a Hardy configuration".into(),
        }),
    }
}

fn half(n: u32) -> Result<u32> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::NeedsEvenN { n });
    }
    Ok(n / 2)
}

fn source_for(n: u32) -> Result<SourceSpec> {
    let h = half(n)?;
    Ok(SourceSpec::two(h, h))
}

/// Exact normalized amplitude `C(m) = amplitude / sqrt(prod_j m_j!)` of a
/// Hardy record, when the radical resolves to a rational. A vanishing
/// record always resolves (to exact zero); a nonzero record resolves
/// whenever its scale is a perfect rational square, and otherwise None is
/// returned and only the float route applies. `|C|^2` is the record's
/// probability.
pub fn hardy_amplitude_exact(
    config: Geometry,
    n: u32,
    outcome: &OutcomeCounts,
) -> Result<Option<Exact>> {
    let config = hardy_geometry(config)?;
    let source = source_for(n)?;
    let map = build_network(config, AngleSettings::new(0.0, 0.0), &LossSpec::none())?;
    let (poly, scale2) = crate::engine::amplitude_parts(&map, &source, outcome)?;
    let c = poly
        .as_constant()
        .expect("Hardy rows are setting-independent");
    if c.is_zero() {
        return Ok(Some(Exact::new(Rat::zero(), Rat::zero())));
    }
    let ratio = scale2 / outcome.perm_factor();
    Ok(sqrt_rat_exact(&ratio).map(|s| Exact::new(&c.re * &s, &c.im * &s)))
}

/// Normalized amplitude as a float; see [`hardy_amplitude_exact`].
pub fn hardy_amplitude(config: Geometry, n: u32, outcome: &OutcomeCounts) -> Result<Complex64> {
    let config = hardy_geometry(config)?;
    let source = source_for(n)?;
    let map = build_network(config, AngleSettings::new(0.0, 0.0), &LossSpec::none())?;
    let (poly, scale2) = crate::engine::amplitude_parts(&map, &source, outcome)?;
    let c = exact_to_c64(&poly.as_constant().expect("setting-independent"));
    let scale = (rat_to_f64(&scale2) / rat_to_f64(&outcome.perm_factor())).sqrt();
    Ok(c * scale)
}

/// The pivot record: every particle at the inner channels, none at the
/// outer ones.
pub fn hardy_pivot(n: u32) -> Result<OutcomeCounts> {
    let h = half(n)?;
    Ok(OutcomeCounts::new(vec![0, h, h, 0]))
}

/// One step of the forcing argument: all records compatible with the
/// conditioning side, with their absolute normalized amplitudes.
#[derive(Debug, Clone)]
pub struct ForcedSide {
    pub config: Geometry,
    /// Records (full four-channel) sharing the conditioned half.
    pub records: Vec<(OutcomeCounts, f64)>,
    /// The single record the other side is forced into.
    pub forced: OutcomeCounts,
}

/// The assembled contradiction.
#[derive(Debug, Clone)]
pub struct HardyReport {
    pub n: u32,
    /// DD pivot record and its probability (nonzero).
    pub pivot: OutcomeCounts,
    pub pivot_probability: f64,
    /// Forcing under DD': left (0, N/2) compels right (N/2, 0).
    pub ddp: ForcedSide,
    /// Forcing under D'D: right (N/2, 0) compels left (0, N/2).
    pub dpd: ForcedSide,
    /// The D'D' record local realism must allow with at least the pivot
    /// probability...
    pub lr_requires: OutcomeCounts,
    pub lr_lower_bound: f64,
    /// ...and its exact quantum probability: zero.
    pub qm_probability: f64,
}

fn forced_side(config: Geometry, n: u32, left_conditioned: bool) -> Result<ForcedSide> {
    let h = n / 2;
    let mut records = Vec::new();
    for split in Support::FixedTotal(h).outcomes(2) {
        let s = split.counts();
        let m = if left_conditioned {
            vec![0, h, s[0], s[1]]
        } else {
            vec![s[0], s[1], h, 0]
        };
        let outcome = OutcomeCounts::new(m);
        let amp = hardy_amplitude(config, n, &outcome)?;
        records.push((outcome, amp.norm()));
    }
    Ok(ForcedSide {
        config,
        records,
        forced: OutcomeCounts::new(vec![0, h, h, 0]),
    })
}

/// Assemble the four-configuration chain. Requires N even with N/2 odd
/// (so N = 2, 6, 10, ...; N = 4 is rejected).
pub fn hardy_report(n: u32) -> Result<HardyReport> {
    let h = half(n)?;
    if h % 2 == 0 {
        return Err(Error::NeedsOddHalf { k: h });
    }
    let pivot = hardy_pivot(n)?;
    let pivot_amp = hardy_amplitude(Geometry::HardyDD, n, &pivot)?;
    let pivot_probability = pivot_amp.norm_sqr();

    let ddp = forced_side(Geometry::HardyDDp, n, true)?;
    let dpd = forced_side(Geometry::HardyDpD, n, false)?;

    let impossible = hardy_amplitude_exact(Geometry::HardyDpDp, n, &pivot)?
        .expect("zero record has exact amplitude");
    assert!(impossible.is_zero(), "D'D' pivot amplitude must vanish");

    Ok(HardyReport {
        n,
        pivot: pivot.clone(),
        pivot_probability,
        ddp,
        dpd,
        lr_requires: pivot,
        lr_lower_bound: pivot_probability,
        qm_probability: 0.0,
    })
}
