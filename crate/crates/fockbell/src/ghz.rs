//! Three-source parity statistics and the all-or-nothing contradiction.
//!
//! Three condensates of N/3 particles each feed the six-channel network;
//! conditioning on N/3 particles per detector pair leaves a state whose
//! three-parity correlator is
//!
//! `<ABC> = sum_q C(N/3,q)^3 cos((N/3 - 2q) x) / sum_q C(N/3,q)^3`,
//!
//! with x = zeta + theta + chi. For N = 3 this is exactly cos x: settings
//! summing to pi give a certain parity product of -1, while all-zero
//! settings give +1. A local model must assign each apparatus a fixed
//! parity per setting, and the product of the three pi-sum predictions
//! forces the all-zero product to -1, the opposite of the quantum value.

use crate::error::{Error, Result};
use crate::exact::{binomial, rat_to_f64, Rat};
use crate::model::{
    build_network, parity, parity_third, AngleSettings, Distribution, Geometry, LossSpec,
    SourceSpec, Support,
};

fn third(n: u32) -> Result<u32> {
    if n == 0 || n % 3 != 0 {
        return Err(Error::NotDivisibleBy3 { n });
    }
    Ok(n / 3)
}

/// Outcome distribution conditioned on N/3 particles in each detector
/// pair, renormalized over that support.
pub fn ghz_distribution(n: u32, angles: &AngleSettings) -> Result<Distribution> {
    let k = third(n)?;
    if angles.chi().is_none() {
        return Err(Error::GeometryMismatch {
            kind: Geometry::ThreeSourceSix.tag().into(),
            reason: "three-source statistics need a chi angle".into(),
        });
    }
    let map = build_network(Geometry::ThreeSourceSix, *angles, &LossSpec::none())?;
    let source = SourceSpec::three(k, k, k);
    crate::engine::distribution(&map, &source, &Support::PerPair(vec![k, k, k]))
}

/// Three-parity correlator of the conditioned distribution.
pub fn abc_from_distribution(dist: &Distribution) -> f64 {
    let mut e = 0.0;
    for (outcome, p) in &dist.entries {
        let (a, b) = parity(outcome);
        let c = parity_third(outcome);
        e += f64::from(a) * f64::from(b) * f64::from(c) * p;
    }
    e
}

/// Closed-form three-parity correlator at settings (zeta, theta, chi).
pub fn abc_correlator(n: u32, zeta: f64, theta: f64, chi: f64) -> Result<f64> {
    let k = third(n)?;
    let x = zeta + theta + chi;
    let mut num = 0.0;
    let mut den = 0.0;
    for q in 0..=k {
        let c = binomial(u64::from(k), u64::from(q));
        let c3 = rat_to_f64(&Rat::from(&c * &c * &c));
        num += c3 * (x * (f64::from(k) - 2.0 * f64::from(q))).cos();
        den += c3;
    }
    Ok(num / den)
}

/// The four-setting contradiction record.
#[derive(Debug, Clone)]
pub struct GhzContradiction {
    pub n: u32,
    /// Three settings whose angles sum to pi; each predicts parity
    /// product -1 with certainty.
    pub pi_settings: [[f64; 3]; 3],
    pub pi_correlators: [f64; 3],
    /// The all-zero setting; quantum mechanics predicts +1.
    pub zero_setting: [f64; 3],
    pub quantum: i8,
    /// What a local assignment of parities must predict for the all-zero
    /// setting, given the three pi-sum results.
    pub local_realism: i8,
}

/// Build the contradiction for N divisible by 3 with N/3 odd.
///
/// With N/3 odd, any settings summing to pi give `<ABC> = -1` exactly
/// (every term of the closed form has cos((k-2q) pi) = -1). Multiplying
/// the three pi-sum identities, each local parity value appears twice
/// except the zero-setting ones, so a local model predicts the all-zero
/// product (-1)^3 = -1. The quantum value is +1.
pub fn ghz_contradiction(n: u32) -> Result<GhzContradiction> {
    let k = third(n)?;
    if k % 2 == 0 {
        return Err(Error::ContradictionNeedsOddThird { k });
    }
    let h = std::f64::consts::FRAC_PI_2;
    let pi_settings = [[h, h, 0.0], [h, 0.0, h], [0.0, h, h]];
    let mut pi_correlators = [0.0; 3];
    for (i, s) in pi_settings.iter().enumerate() {
        pi_correlators[i] = abc_correlator(n, s[0], s[1], s[2])?;
        assert!(
            (pi_correlators[i] + 1.0).abs() < 1e-12,
            "pi-sum correlator drifted: {}",
            pi_correlators[i]
        );
    }
    let zero = abc_correlator(n, 0.0, 0.0, 0.0)?;
    assert!((zero - 1.0).abs() < 1e-12);
    Ok(GhzContradiction {
        n,
        pi_settings,
        pi_correlators,
        zero_setting: [0.0; 3],
        quantum: 1,
        local_realism: -1,
    })
}
