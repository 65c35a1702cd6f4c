//! Parity correlators and the BCHSH quantity.
//!
//! Each apparatus reports the parity of its second-channel count; the
//! product of the two parities defines the correlator E. For double Fock
//! sources the correlator has a closed form,
//!
//! `E = pref(N_a, N_b, M) * cos^M((zeta + theta) / 2)`,
//!
//! where M is the detected count. The combination
//! `Q = E(a,b) + E(a,b') + E(a',b) - E(a',b')` obeys |Q| <= 2 for any
//! local model but reaches 1 + sqrt(2) at N = 2 and stays above 2.32 for
//! all N, declining slowly toward `3 * 3^(-1/8) - 3^(-9/8)` - numerically
//! 2.32449 - as N grows, with the optimum angle shrinking like
//! sqrt(ln 3 / N).

use num::Zero;

use crate::error::{Error, Result};
use crate::exact::{factorial_rat, rat_to_f64, Rat};
use crate::model::{LossSpec, SourceSpec};

/// Exact prefactor of the parity correlator.
///
/// Unconditioned (`conditioned = false`): includes the binomial loss weight
/// `t^M (1-t)^{N-M}`; this is the correlator over all runs, counting runs
/// with a different detected total as contributing their parity product
/// weighted by zero.
///
/// Conditioned (`conditioned = true`): correlator among runs whose detected
/// count equals M; the loss weight divides out and the transmission drops
/// from the formula entirely.
///
/// Zero when M is odd or when either source cannot supply M/2 particles.
pub fn correlator_prefactor_rat(
    source: &SourceSpec,
    loss: &LossSpec,
    m_detected: u32,
    conditioned: bool,
) -> Result<Rat> {
    if source.n_sources() != 2 {
        return Err(Error::SourceArity {
            got: source.n_sources(),
            expected: 2,
            kind: "parity correlator".into(),
        });
    }
    let (na, nb) = (source.counts()[0], source.counts()[1]);
    let n = na + nb;
    if m_detected > n {
        return Err(Error::MOutOfRange { m: m_detected, n });
    }
    let m = m_detected;
    if m % 2 != 0 || m / 2 > na || m / 2 > nb {
        return Ok(Rat::zero());
    }
    let h = m / 2;
    let mut pref = factorial_rat(na) * factorial_rat(nb)
        / (factorial_rat(na - h) * factorial_rat(nb - h) * factorial_rat(h) * factorial_rat(h));
    if conditioned {
        pref *= factorial_rat(m) * factorial_rat(n - m) / factorial_rat(n);
    } else {
        let t = loss.transmission_rat();
        let r = loss.reflection_rat();
        for _ in 0..m {
            pref *= &t;
        }
        for _ in 0..(n - m) {
            pref *= &r;
        }
    }
    Ok(pref)
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

/// Float prefactor; exact-rational route for small N, log-space for the
/// very large N where the factorials overwhelm bignum arithmetic.
fn correlator_prefactor(
    source: &SourceSpec,
    loss: &LossSpec,
    m_detected: u32,
    conditioned: bool,
) -> Result<f64> {
    let (na, nb) = (source.counts()[0], source.counts()[1]);
    let n = na + nb;
    if n <= 256 {
        return Ok(rat_to_f64(&correlator_prefactor_rat(
            source,
            loss,
            m_detected,
            conditioned,
        )?));
    }
    if m_detected > n {
        return Err(Error::MOutOfRange { m: m_detected, n });
    }
    let m = m_detected;
    if m % 2 != 0 || m / 2 > na || m / 2 > nb {
        return Ok(0.0);
    }
    let h = m / 2;
    let mut ln = ln_factorial(na) + ln_factorial(nb)
        - ln_factorial(na - h)
        - ln_factorial(nb - h)
        - 2.0 * ln_factorial(h);
    if conditioned {
        ln += ln_factorial(m) + ln_factorial(n - m) - ln_factorial(n);
    } else {
        let t = loss.transmission();
        let r = 1.0 - t;
        if m > 0 {
            if t == 0.0 {
                return Ok(0.0);
            }
            ln += f64::from(m) * t.ln();
        }
        if n > m {
            if r == 0.0 {
                return Ok(0.0);
            }
            ln += f64::from(n - m) * r.ln();
        }
    }
    Ok(ln.exp())
}

/// Parity correlator `<A B>` at settings (zeta, theta).
pub fn ab_correlator(
    source: &SourceSpec,
    zeta: f64,
    theta: f64,
    loss: &LossSpec,
    m_detected: u32,
    conditioned: bool,
) -> Result<f64> {
    let pref = correlator_prefactor(source, loss, m_detected, conditioned)?;
    Ok(pref * half_angle_cos_pow(zeta + theta, m_detected))
}

/// Lossless equal-split correlator: N/2 particles per source, all detected.
/// `E = cos^N((zeta + theta)/2)`; N must be even.
pub fn ab_closed_form(n: u32, zeta: f64, theta: f64) -> Result<f64> {
    if n % 2 != 0 {
        return Err(Error::NeedsEvenN { n });
    }
    Ok(half_angle_cos_pow(zeta + theta, n))
}

/// cos^m(x/2), stable for very large m: computed as exp(m ln |cos|) with
/// the sign restored. Returns 0 at the zeros of the cosine.
fn half_angle_cos_pow(x: f64, m: u32) -> f64 {
    let c = (x / 2.0).cos();
    if c == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if m <= 64 {
        return c.powi(m as i32);
    }
    let mag = (f64::from(m) * c.abs().ln()).exp();
    if c < 0.0 && m % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// BCHSH combination for a correlator that depends only on the difference
/// of the local settings: `E(a-b) + E(a-b') + E(a'-b) - E(a'-b')`.
pub fn bchsh_q(e: impl Fn(f64) -> f64, phi_a: f64, phi_a2: f64, phi_b: f64, phi_b2: f64) -> f64 {
    e(phi_a - phi_b) + e(phi_a - phi_b2) + e(phi_a2 - phi_b) - e(phi_a2 - phi_b2)
}

/// Result of a BCHSH maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct QResult {
    pub q_max: f64,
    /// The single optimal angle parameter; the four settings below are its
    /// standard layout.
    pub omega_star: f64,
    /// (phi_a, phi_a', phi_b, phi_b') = (0, -2w, -w, w).
    pub settings: [f64; 4],
}

/// Correlator-as-difference-function for a split of N over two sources as
/// evenly as possible, with M of the N particles detected.
fn difference_correlator(n: u32, m_detected: u32, conditioned: bool) -> Result<impl Fn(f64) -> f64> {
    let source = SourceSpec::two(n.div_ceil(2), n / 2);
    let pref = correlator_prefactor(&source, &LossSpec::none(), m_detected, conditioned)?;
    Ok(move |omega: f64| pref * half_angle_cos_pow(omega, m_detected))
}

/// Value of the BCHSH combination at the one-parameter layout:
/// `Q(w) = 3 E(w) - E(3w)`.
pub fn q_at(n: u32, m_detected: u32, conditioned: bool, omega: f64) -> Result<f64> {
    let e = difference_correlator(n, m_detected, conditioned)?;
    Ok(bchsh_q(&e, 0.0, -2.0 * omega, -omega, omega))
}

/// Maximize the BCHSH combination over the one-parameter family.
///
/// A grid of 2 * 10^4 points on (0, pi/2] locates the global maximum of
/// `Q(w) = 3 E(w) - E(3w)`; ternary refinement then pins w to 1e-8. Ties
/// resolve toward the smaller angle. The result is checked against the
/// quantum bound 2 sqrt(2).
pub fn maximize_q(n: u32, m_detected: u32, conditioned: bool) -> Result<QResult> {
    if m_detected > n {
        return Err(Error::MOutOfRange { m: m_detected, n });
    }
    let e = difference_correlator(n, m_detected, conditioned)?;
    let q = |w: f64| bchsh_q(&e, 0.0, -2.0 * w, -w, w);

    const GRID: usize = 20_000;
    let hi = std::f64::consts::FRAC_PI_2;
    let mut best_w = hi / GRID as f64;
    let mut best_q = q(best_w);
    for i in 2..=GRID {
        let w = hi * i as f64 / GRID as f64;
        let v = q(w);
        if v > best_q {
            best_q = v;
            best_w = w;
        }
    }
    // Ternary refinement on the bracketing interval.
    let step = hi / GRID as f64;
    let (mut lo, mut up) = ((best_w - step).max(step * 1e-3), (best_w + step).min(hi));
    while up - lo > 1e-9 {
        let m1 = lo + (up - lo) / 3.0;
        let m2 = up - (up - lo) / 3.0;
        if q(m1) >= q(m2) {
            up = m2;
        } else {
            lo = m1;
        }
    }
    let w = 0.5 * (lo + up);
    let (omega_star, q_max) = if q(w) >= best_q {
        (w, q(w))
    } else {
        (best_w, best_q)
    };
    assert!(
        q_max <= 2.0 * std::f64::consts::SQRT_2 + 1e-9,
        "quantum bound exceeded: {q_max}"
    );
    Ok(QResult {
        q_max,
        omega_star,
        settings: [0.0, -2.0 * omega_star, -omega_star, omega_star],
    })
}

/// The asymptotically optimal angle sqrt(ln 3 / N).
pub fn asymptotic_omega(n: u32) -> f64 {
    (3.0f64.ln() / f64::from(n)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{distribution, probability_lossy};
    use crate::exact::rat;
    use num::One;
    use crate::model::{
        build_network, compositions, parity, AngleSettings, Geometry, OutcomeCounts, Placement,
        Support,
    };

    #[test]
    fn closed_form_matches_summed_engine_correlator() {
        for (na, nb) in [(1u32, 1u32), (2, 2), (2, 1)] {
            for (zeta, theta) in [(0.3, 0.5), (-1.0, 0.4)] {
                let map = build_network(
                    Geometry::TwoSourceFour,
                    AngleSettings::new(zeta, theta),
                    &LossSpec::none(),
                )
                .unwrap();
                let source = SourceSpec::two(na, nb);
                let dist =
                    distribution(&map, &source, &Support::FixedTotal(na + nb)).unwrap();
                let mut e = 0.0;
                for (outcome, p) in &dist.entries {
                    let (a, b) = parity(outcome);
                    e += f64::from(a) * f64::from(b) * p;
                }
                let closed =
                    ab_correlator(&source, zeta, theta, &LossSpec::none(), na + nb, false)
                        .unwrap();
                assert!((e - closed).abs() < 1e-12, "({na},{nb}): {e} vs {closed}");
            }
        }
    }

    #[test]
    fn lossy_closed_form_matches_summed_lossy_engine() {
        let source = SourceSpec::two(2, 2);
        let loss = LossSpec::new(0.5, Placement::AtSources).unwrap();
        let (zeta, theta) = (0.7, -0.1);
        let angles = AngleSettings::new(zeta, theta);
        for m in [0u32, 2, 4] {
            let mut e = 0.0;
            for c in compositions(m, 4) {
                let outcome = OutcomeCounts::new(c);
                let (a, b) = parity(&outcome);
                let p = probability_lossy(&source, &outcome, &loss, &angles).unwrap();
                e += f64::from(a) * f64::from(b) * p;
            }
            let closed = ab_correlator(&source, zeta, theta, &loss, m, false).unwrap();
            assert!((e - closed).abs() < 1e-12, "M={m}: {e} vs {closed}");
        }
    }

    #[test]
    fn odd_m_and_starved_sources_give_zero() {
        let loss = LossSpec::none();
        let source = SourceSpec::two(2, 2);
        assert_eq!(
            correlator_prefactor_rat(&source, &loss, 3, true).unwrap(),
            Rat::zero()
        );
        // M/2 = 2 > n_beta = 1
        let skew = SourceSpec::two(3, 1);
        assert_eq!(
            correlator_prefactor_rat(&skew, &loss, 4, true).unwrap(),
            Rat::zero()
        );
    }

    #[test]
    fn conditioned_prefactor_near_full_detection() {
        // M = N - 1 with sources (M/2 + 1, M/2): prefactor (M/2+1)/(M+1).
        for h in 1u32..=4 {
            let m = 2 * h;
            let source = SourceSpec::two(h + 1, h);
            let pref =
                correlator_prefactor_rat(&source, &LossSpec::none(), m, true).unwrap();
            assert_eq!(pref, rat(i64::from(h + 1), i64::from(m + 1)));
        }
    }

    #[test]
    fn full_detection_unconditioned_is_pure_cosine_power() {
        let source = SourceSpec::two(3, 3);
        let pref = correlator_prefactor_rat(&source, &LossSpec::none(), 6, false).unwrap();
        assert_eq!(pref, Rat::one());
        let e = ab_closed_form(6, 0.5, 0.3).unwrap();
        assert!((e - (0.4f64).cos().powi(6)).abs() < 1e-15);
        assert!(ab_closed_form(5, 0.0, 0.0).is_err());
    }

    #[test]
    fn n2_maximum_is_one_plus_sqrt2() {
        let r = maximize_q(2, 2, false).unwrap();
        assert!((r.q_max - (1.0 + std::f64::consts::SQRT_2)).abs() < 1e-9);
        assert!((r.omega_star - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
        assert_eq!(r.settings[0], 0.0);
        assert!((r.settings[3] - r.omega_star).abs() < 1e-15);
    }

    #[test]
    fn q_declines_toward_large_n_plateau() {
        let q2 = maximize_q(2, 2, false).unwrap().q_max;
        let q4 = maximize_q(4, 4, false).unwrap().q_max;
        let q100 = maximize_q(100, 100, false).unwrap().q_max;
        assert!(q2 > q4 && q4 > q100);
        assert!(q100 > 2.32, "plateau undercut: {q100}");
        assert!((q4 - 2.3623).abs() < 5e-4);
    }

    #[test]
    fn huge_n_runs_fast_and_hits_asymptote() {
        let r = maximize_q(1_000_000, 1_000_000, false).unwrap();
        let plateau = 3.0 * 3.0f64.powf(-1.0 / 8.0) - 3.0f64.powf(-9.0 / 8.0);
        assert!((r.q_max - plateau).abs() < 1e-3, "{} vs {plateau}", r.q_max);
        let ratio = r.omega_star / asymptotic_omega(1_000_000);
        assert!((ratio - 1.0).abs() < 0.05, "omega ratio {ratio}");
    }

    #[test]
    fn subunit_detection_cannot_violate() {
        // Losing even one particle pulls Q back within the local bound.
        for n in [3u32, 5, 7, 9] {
            let r = maximize_q(n, n - 1, true).unwrap();
            assert!(r.q_max <= 2.0 + 1e-12, "N={n}: {}", r.q_max);
        }
    }

    #[test]
    fn degenerate_detected_counts_stay_within_bounds() {
        // Odd detected totals have an identically zero correlator.
        let odd = maximize_q(2, 1, true).unwrap();
        assert_eq!(odd.q_max, 0.0);
        // Zero detections: parity is +1 with certainty, so Q = 2 exactly.
        let none = maximize_q(2, 0, true).unwrap();
        assert!((none.q_max - 2.0).abs() < 1e-12);
        assert!(matches!(
            maximize_q(2, 3, true),
            Err(Error::MOutOfRange { .. })
        ));
    }
}
