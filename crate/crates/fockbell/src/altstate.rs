//! Alternative source states: coherent pairs, phase states, and general
//! two-mode superpositions.
//!
//! A pair of coherent states carries a definite relative phase; the count
//! pattern then factorizes into per-channel intensities and no Bell
//! violation survives, however the settings are chosen. A phase state is
//! the N-particle shell of that picture. A general two-mode state
//! interpolates: its distribution needs the full amplitude sum with
//! cross terms, which for double Fock inputs is what restores the second
//! quantum angle that the classical picture is missing.

use num::complex::Complex64;

use crate::error::{Error, Result};
use crate::exact::{factorial_rat, rat_to_f64, Rat};
use crate::model::{
    build_network, AngleSettings, Distribution, Geometry, LossSpec, OutcomeCounts, SourceSpec,
    Support,
};

/// Per-channel intensity factors of a definite relative phase `lam`:
/// `1 + cos(zeta + lam)`, `1 - cos(zeta + lam)`, `1 + cos(theta - lam)`,
/// `1 - cos(theta - lam)`.
fn intensity_factors(lam: f64, angles: &AngleSettings) -> [f64; 4] {
    let a = (angles.zeta() + lam).cos();
    let b = (angles.theta() - lam).cos();
    [1.0 + a, 1.0 - a, 1.0 + b, 1.0 - b]
}

/// Probability of a count record for two coherent sources with phases
/// (phi_alpha, phi_beta), conditioned on the record's total M. Only the
/// relative phase matters. Exactly the factorized form: no quantum angle.
pub fn coherent_probability(
    phi_alpha: f64,
    phi_beta: f64,
    outcome: &OutcomeCounts,
    angles: &AngleSettings,
) -> Result<f64> {
    if outcome.len() != 4 {
        return Err(Error::OutcomeArity {
            got: outcome.len(),
            expected: 4,
        });
    }
    let m = outcome.total();
    let f = intensity_factors(phi_alpha - phi_beta, angles);
    let mut w = 1.0;
    for (channel, &mj) in outcome.counts().iter().enumerate() {
        for _ in 0..mj {
            w *= f[channel];
        }
    }
    w /= rat_to_f64(&outcome.perm_factor());
    // The support total is (sum of factors)^M / M! = 4^M / M!.
    let mut norm = 1.0;
    for k in 1..=m {
        norm *= 4.0 / f64::from(k);
    }
    Ok(w / norm)
}

/// Coherent-pair probability averaged uniformly over the relative phase;
/// identical to the classical-field limit of the exact engine, computed by
/// the same exact constant-term extraction.
pub fn coherent_averaged_probability(
    outcome: &OutcomeCounts,
    angles: &AngleSettings,
) -> Result<f64> {
    crate::engine::classical_limit_probability(outcome, angles)
}

/// Parity correlator of the phase-averaged coherent model at detected
/// count M: a Wallis-damped pure cosine power,
/// `E = K_M cos^M((zeta+theta)/2)` with `K_M = 2^{-M} M! / ((M/2)!)^2`.
pub fn classical_correlator(m: u32, zeta: f64, theta: f64) -> f64 {
    let k = wallis_factor(m);
    let c = ((zeta + theta) / 2.0).cos();
    k * c.powi(m as i32)
}

/// `2^{-M} M! / ((M/2)!)^2` as a float; zero for odd M.
fn wallis_factor(m: u32) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let h = m / 2;
    let mut k = 1.0;
    // Central binomial C(M, M/2) over 2^M, built factor by factor.
    for j in 1..=h {
        k *= f64::from(h + j) / f64::from(j) / 4.0;
    }
    k
}

/// Outcome of a full four-angle BCHSH search.
#[derive(Debug, Clone)]
pub struct ClassicalSearch {
    pub q_max: f64,
    pub settings: [f64; 4],
}

/// Maximize the BCHSH combination of the phase-averaged coherent
/// correlator over all four settings.
///
/// The correlator depends only on the sum of the two local settings, so
/// with x = a+b, y = a+b', z = a'+b the fourth argument is y+z-x and the
/// search is three-dimensional: grid plus coordinate refinement.
pub fn classical_bchsh_search(m: u32) -> ClassicalSearch {
    let f = |u: f64| classical_correlator(m, u, 0.0);
    let q = |x: f64, y: f64, z: f64| f(x) + f(y) + f(z) - f(y + z - x);

    const STEPS: usize = 48;
    let pi = std::f64::consts::PI;
    let grid = |i: usize| -pi + 2.0 * pi * i as f64 / STEPS as f64;
    let mut best = (0.0, 0.0, 0.0);
    let mut best_q = f64::NEG_INFINITY;
    for i in 0..STEPS {
        for j in 0..STEPS {
            for k in 0..STEPS {
                let v = q(grid(i), grid(j), grid(k));
                if v > best_q {
                    best_q = v;
                    best = (grid(i), grid(j), grid(k));
                }
            }
        }
    }
    // Coordinate-wise ternary refinement.
    let (mut x, mut y, mut z) = best;
    let mut span = 2.0 * pi / STEPS as f64;
    for _ in 0..60 {
        for coord in 0..3 {
            let eval = |v: f64, c: usize, x: f64, y: f64, z: f64| match c {
                0 => q(v, y, z),
                1 => q(x, v, z),
                _ => q(x, y, v),
            };
            let center = [x, y, z][coord];
            let (mut lo, mut hi) = (center - span, center + span);
            for _ in 0..40 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if eval(m1, coord, x, y, z) >= eval(m2, coord, x, y, z) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let v = 0.5 * (lo + hi);
            match coord {
                0 => x = v,
                1 => y = v,
                _ => z = v,
            }
        }
        span *= 0.7;
    }
    let q_final = q(x, y, z).max(best_q);
    // Recover (a, a', b, b'): gauge-fix a = 0.
    let a = 0.0;
    let b = x - a;
    let b2 = y - a;
    let a2 = z - b;
    ClassicalSearch {
        q_max: q_final,
        settings: [a, a2, b, b2],
    }
}

/// Probability of a count record for the N-particle phase state with
/// relative phase phi0: `N!/4^N * prod_j f_j^{m_j} / m_j!`, already
/// normalized over the fixed-N support.
pub fn phase_state_probability(
    n: u32,
    phi0: f64,
    outcome: &OutcomeCounts,
    angles: &AngleSettings,
) -> Result<f64> {
    if outcome.len() != 4 {
        return Err(Error::OutcomeArity {
            got: outcome.len(),
            expected: 4,
        });
    }
    if outcome.total() != n {
        return Err(Error::OutcomeTotal {
            got: outcome.total(),
            expected: n,
        });
    }
    let f = intensity_factors(phi0, angles);
    let mut w = rat_to_f64(&factorial_rat(n)) / 4f64.powi(n as i32);
    for (channel, &mj) in outcome.counts().iter().enumerate() {
        for _ in 0..mj {
            w *= f[channel];
        }
        w /= rat_to_f64(&factorial_rat(mj));
    }
    Ok(w)
}

/// General two-mode N-particle state `sum_q x_q |q, N-q>`.
#[derive(Debug, Clone)]
pub struct GeneralTwoModeState {
    n: u32,
    x: Vec<Complex64>,
}

impl GeneralTwoModeState {
    /// Coefficients x_q for q = 0..=N; must be normalized:
    /// `sum |x_q|^2 = 1` within 1e-12.
    pub fn new(n: u32, x: Vec<Complex64>) -> Result<Self> {
        if x.len() != n as usize + 1 {
            return Err(Error::StateArity {
                got: x.len(),
                expected: n as usize + 1,
            });
        }
        let norm: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { n, x })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.x
    }

    /// Double Fock state as the one-hot special case.
    pub fn fock(n_alpha: u32, n_beta: u32) -> Self {
        let n = n_alpha + n_beta;
        let mut x = vec![Complex64::new(0.0, 0.0); n as usize + 1];
        x[n_alpha as usize] = Complex64::new(1.0, 0.0);
        Self { n, x }
    }

    /// Phase state: `x_q = sqrt(C(N,q)) e^{i q phi0} / 2^{N/2}`.
    pub fn phase(n: u32, phi0: f64) -> Self {
        let mut x = Vec::with_capacity(n as usize + 1);
        let half_pow = 2f64.powf(-f64::from(n) / 2.0);
        for q in 0..=n {
            let b = rat_to_f64(&Rat::from(crate::exact::binomial(
                u64::from(n),
                u64::from(q),
            )))
            .sqrt();
            x.push(Complex64::new(0.0, f64::from(q) * phi0).exp() * b * half_pow);
        }
        Self { n, x }
    }
}

/// Count distribution of a general two-mode state: the coherent sum of
/// double-Fock amplitudes, `P(m) = |sum_q x_q A_q(m)|^2 / prod_j m_j!`,
/// including all cross terms.
pub fn general_state_distribution(
    state: &GeneralTwoModeState,
    angles: &AngleSettings,
) -> Result<Distribution> {
    let n = state.n;
    let map = build_network(Geometry::TwoSourceFour, *angles, &LossSpec::none())?;
    let support = Support::FixedTotal(n);
    let mut entries = Vec::new();
    for outcome in support.outcomes(4) {
        let mut amp = Complex64::new(0.0, 0.0);
        for (q, xq) in state.x.iter().enumerate() {
            if xq.norm_sqr() == 0.0 {
                continue;
            }
            let source = SourceSpec::two(q as u32, n - q as u32);
            amp += xq * crate::engine::amplitude(&map, &source, &outcome)?;
        }
        let p = amp.norm_sqr() / rat_to_f64(&outcome.perm_factor());
        entries.push((outcome, p));
    }
    Ok(Distribution { support, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn angles(z: f64, t: f64) -> AngleSettings {
        AngleSettings::new(z, t)
    }

    #[test]
    fn coherent_zero_factor_kills_channel_two() {
        // phi_alpha - phi_beta = -zeta makes the second factor 1 - cos 0 = 0.
        let a = angles(0.8, 0.3);
        let outcome = OutcomeCounts::new(vec![1, 1, 1, 0]);
        let p = coherent_probability(-0.8, 0.0, &outcome, &a).unwrap();
        assert_eq!(p, 0.0);
        let survive = OutcomeCounts::new(vec![2, 0, 1, 0]);
        assert!(coherent_probability(-0.8, 0.0, &survive, &a).unwrap() > 0.0);
    }

    #[test]
    fn coherent_normalizes_over_fixed_total() {
        let a = angles(0.4, -1.0);
        for m in 1..=4u32 {
            let mut total = 0.0;
            for outcome in Support::FixedTotal(m).outcomes(4) {
                total += coherent_probability(0.7, 0.2, &outcome, &a).unwrap();
            }
            assert!((total - 1.0).abs() < 1e-12, "M={m}: {total}");
        }
    }

    #[test]
    fn averaged_coherent_equals_classical_limit() {
        let a = angles(0.3, 0.9);
        for outcome in Support::FixedTotal(3).outcomes(4) {
            let avg = coherent_averaged_probability(&outcome, &a).unwrap();
            let cl = crate::engine::classical_limit_probability(&outcome, &a).unwrap();
            assert_eq!(avg, cl);
        }
    }

    #[test]
    fn classical_correlator_matches_summed_model() {
        for m in [2u32, 4] {
            for (z, t) in [(0.2, 0.4), (-0.7, 0.15)] {
                let a = angles(z, t);
                let mut e = 0.0;
                for outcome in Support::FixedTotal(m).outcomes(4) {
                    let (pa, pb) = crate::model::parity(&outcome);
                    e += f64::from(pa)
                        * f64::from(pb)
                        * coherent_averaged_probability(&outcome, &a).unwrap();
                }
                let closed = classical_correlator(m, z, t);
                assert!((e - closed).abs() < 1e-12, "M={m}: {e} vs {closed}");
            }
        }
    }

    #[test]
    fn float_wallis_matches_exact() {
        for m in 0..=12u32 {
            let want = rat_to_f64(&crate::validation::wallis_k(m));
            assert!((wallis_factor(m) - want).abs() < 1e-15, "m={m}");
        }
    }

    #[test]
    fn classical_search_stays_local() {
        for m in [2u32, 4, 6, 8] {
            let s = classical_bchsh_search(m);
            assert!(s.q_max <= 2.0 + 1e-9, "M={m}: {}", s.q_max);
            // The Wallis damping is real: even the best settings only
            // reach K_M times the unit-correlator bound.
            assert!(s.q_max > 0.5);
        }
    }

    #[test]
    fn phase_state_is_normalized_and_matches_general_state() {
        let a = angles(0.45, -0.8);
        for n in [2u32, 3] {
            let phi0 = 0.6;
            let mut total = 0.0;
            let general =
                general_state_distribution(&GeneralTwoModeState::phase(n, phi0), &a).unwrap();
            for outcome in Support::FixedTotal(n).outcomes(4) {
                let p = phase_state_probability(n, phi0, &outcome, &a).unwrap();
                total += p;
                let g = general.get(&outcome).unwrap();
                assert!((p - g).abs() < 1e-13, "N={n} {outcome}: {p} vs {g}");
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_general_state_reduces_to_double_fock() {
        let a = angles(0.25, 0.75);
        let state = GeneralTwoModeState::fock(2, 1);
        let dist = general_state_distribution(&state, &a).unwrap();
        let map = build_network(Geometry::TwoSourceFour, a, &LossSpec::none()).unwrap();
        let source = SourceSpec::two(2, 1);
        for (outcome, p) in &dist.entries {
            let want = crate::engine::probability(&map, &source, outcome).unwrap();
            assert!((p - want).abs() < 1e-14);
        }
    }

    #[test]
    fn state_validation() {
        let bad_len = GeneralTwoModeState::new(2, vec![Complex64::new(1.0, 0.0); 2]);
        assert!(matches!(bad_len, Err(Error::StateArity { .. })));
        let unnorm = GeneralTwoModeState::new(1, vec![Complex64::new(1.0, 0.0); 2]);
        assert!(matches!(unnorm, Err(Error::NotNormalized { .. })));
        let ok = GeneralTwoModeState::new(
            1,
            vec![
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2),
            ],
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn phase_state_coefficients_are_normalized() {
        for n in [1u32, 2, 5, 8] {
            let s = GeneralTwoModeState::phase(n, 1.1);
            let norm: f64 = s.coefficients().iter().map(|c| c.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12, "N={n}");
        }
    }
}
