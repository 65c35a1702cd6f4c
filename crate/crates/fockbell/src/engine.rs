//! Main computation engine: amplitudes and probabilities by constant-term
//! extraction.
//!
//! Each source is tagged with a phase marker `e^{i v_s}`; a detection record
//! `m = (m_1, ..., m_J)` turns into the polynomial
//! `prod_j (sum_s g_{js} e^{i v_s})^{m_j}`, and the amplitude is the
//! coefficient of `prod_s e^{i N_s v_s}` times `sqrt(prod_s N_s! *
//! prod_j scale2_j^{m_j})`. With Gaussian-rational coefficients the
//! extraction is exact; structural zeros come out as empty polynomials.
//!
//! For particle numbers beyond `EXACT_LIMIT` the same coefficient is picked
//! up numerically by trapezoid quadrature on the marker circle, which is
//! exact for trigonometric polynomials up to rounding.

use std::f64::consts::PI;

use num::complex::Complex64;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{factorial_rat, rat, rat_to_f64, Exact, Rat};
use crate::model::{
    compositions, Distribution, LossSpec, OutcomeCounts, OutputMap, Placement, SourceSpec, Support,
};
use crate::model::{build_network, AngleSettings, Geometry};
use crate::poly::{PhasePoly, THETA, V0, V1, ZETA};

/// Largest N handled on the exact path; beyond this `amplitude` and
/// `probability` switch to quadrature.
pub const EXACT_LIMIT: u32 = 64;

fn validate(map: &OutputMap, source: &SourceSpec, outcome: &OutcomeCounts) -> Result<()> {
    if source.n_sources() != map.n_sources() {
        return Err(Error::SourceArity {
            got: source.n_sources(),
            expected: map.n_sources(),
            kind: map.kind.tag().into(),
        });
    }
    if outcome.len() != map.rows.len() {
        return Err(Error::OutcomeArity {
            got: outcome.len(),
            expected: map.rows.len(),
        });
    }
    if outcome.total() != source.total() {
        return Err(Error::OutcomeTotal {
            got: outcome.total(),
            expected: source.total(),
        });
    }
    Ok(())
}

/// Exact amplitude as `sqrt(scale2) * poly(settings)`.
pub fn amplitude_parts(
    map: &OutputMap,
    source: &SourceSpec,
    outcome: &OutcomeCounts,
) -> Result<(PhasePoly, Rat)> {
    validate(map, source, outcome)?;
    let mut prod = PhasePoly::one();
    for (row, &mj) in map.rows.iter().zip(outcome.counts()) {
        if mj > 0 {
            prod = prod.mul(&row.combination().pow(mj));
        }
    }
    let ns = source.n_sources();
    let dims: Vec<usize> = (0..ns).collect();
    let want: Vec<i16> = source.counts().iter().map(|&n| n as i16).collect();
    let poly = prod.extract(&dims, &want);

    let mut scale2 = Rat::one();
    for &n in source.counts() {
        scale2 *= factorial_rat(n);
    }
    for (row, &mj) in map.rows.iter().zip(outcome.counts()) {
        for _ in 0..mj {
            scale2 *= &row.scale2;
        }
    }
    Ok((poly, scale2))
}

/// Numeric amplitude at the map's settings. Exact path for N within
/// `EXACT_LIMIT`, quadrature beyond.
pub fn amplitude(map: &OutputMap, source: &SourceSpec, outcome: &OutcomeCounts) -> Result<Complex64> {
    if source.total() <= EXACT_LIMIT {
        let (poly, scale2) = amplitude_parts(map, source, outcome)?;
        Ok(poly.eval(&map.angles) * rat_to_f64(&scale2).sqrt())
    } else {
        amplitude_quadrature(map, source, outcome)
    }
}

/// Exact probability polynomial `|amplitude|^2 / prod_j m_j!` in the
/// setting angles; hermitian, hence real-valued.
pub fn probability_parts(
    map: &OutputMap,
    source: &SourceSpec,
    outcome: &OutcomeCounts,
) -> Result<PhasePoly> {
    let (poly, scale2) = amplitude_parts(map, source, outcome)?;
    let mut prob = poly.conj().mul(&poly);
    prob.scale_rat(&(scale2 / outcome.perm_factor()));
    Ok(prob)
}

pub fn probability(map: &OutputMap, source: &SourceSpec, outcome: &OutcomeCounts) -> Result<f64> {
    if source.total() <= EXACT_LIMIT {
        Ok(probability_parts(map, source, outcome)?.eval_real(&map.angles))
    } else {
        let amp = amplitude_quadrature(map, source, outcome)?;
        Ok(amp.norm_sqr() / rat_to_f64(&outcome.perm_factor()))
    }
}

/// Exact probability polynomials over a support, in deterministic order.
pub fn distribution_parts(
    map: &OutputMap,
    source: &SourceSpec,
    support: &Support,
) -> Result<Vec<(OutcomeCounts, PhasePoly)>> {
    let mut out = Vec::new();
    for outcome in support.outcomes(map.rows.len()) {
        let poly = probability_parts(map, source, &outcome)?;
        out.push((outcome, poly));
    }
    Ok(out)
}

/// Numeric distribution over a support.
///
/// A `FixedTotal` support is reported raw (for a lossless network it sums
/// to 1 exactly). A `PerPair` support conditions on the pair counts: the
/// table is renormalized by its explicit sum.
pub fn distribution(
    map: &OutputMap,
    source: &SourceSpec,
    support: &Support,
) -> Result<Distribution> {
    let parts = distribution_parts(map, source, support)?;
    let mut entries: Vec<(OutcomeCounts, f64)> = parts
        .into_iter()
        .map(|(o, p)| {
            let v = p.eval_real(&map.angles);
            (o, v)
        })
        .collect();
    if let Support::PerPair(_) = support {
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if total > 0.0 {
            for (_, p) in &mut entries {
                *p /= total;
            }
        }
    }
    Ok(Distribution {
        support: support.clone(),
        entries,
    })
}

/// Trapezoid-rule coefficient pickup. With K = 2N+2 nodes per marker the
/// rule integrates every harmonic |k| <= 2N+1 exactly, and the integrand
/// only contains harmonics up to N per marker.
fn amplitude_quadrature(
    map: &OutputMap,
    source: &SourceSpec,
    outcome: &OutcomeCounts,
) -> Result<Complex64> {
    validate(map, source, outcome)?;
    let n = source.total();
    let k = 2 * n as usize + 2;
    let ns = source.n_sources();
    let rows: Vec<(f64, Vec<Complex64>)> = map
        .rows
        .iter()
        .map(|row| {
            let scale = rat_to_f64(&row.scale2).sqrt();
            let g: Vec<Complex64> = row.g.iter().map(|p| p.eval(&map.angles)).collect();
            (scale, g)
        })
        .collect();

    // One marker per source beyond the first is enough: the amplitude is a
    // homogeneous polynomial of total degree N in the markers, so fixing
    // marker 0 to 1 and shifting the target exponent is exact.
    let free = ns - 1;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut idx = vec![0usize; free];
    loop {
        let mut phases = vec![Complex64::new(1.0, 0.0); ns];
        let mut weight = Complex64::new(1.0, 0.0);
        for (d, &i) in idx.iter().enumerate() {
            let mu = 2.0 * PI * i as f64 / k as f64;
            phases[d + 1] = Complex64::new(0.0, mu).exp();
            let target = f64::from(source.counts()[d + 1]);
            weight *= Complex64::new(0.0, -target * mu).exp();
        }
        let mut f = Complex64::new(1.0, 0.0);
        for ((scale, g), &mj) in rows.iter().zip(outcome.counts()) {
            if mj == 0 {
                continue;
            }
            let mut v = Complex64::new(0.0, 0.0);
            for (s, gs) in g.iter().enumerate() {
                v += gs * phases[s];
            }
            f *= (scale * v).powu(mj);
        }
        acc += weight * f;

        // odometer over the free markers
        let mut d = 0;
        loop {
            if d == free {
                let mut fact = 1.0;
                for &nsrc in source.counts() {
                    for q in 1..=nsrc {
                        fact *= f64::from(q);
                    }
                }
                return Ok(acc / (k as f64).powi(free as i32) * fact.sqrt());
            }
            idx[d] += 1;
            if idx[d] < k {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Exact binomial marginal of the detected count: with per-particle
/// transmission t, `P(M) = C(N, M) t^M (1-t)^{N-M}`.
pub fn marginal_m_rat(source: &SourceSpec, loss: &LossSpec, m_detected: u32) -> Result<Rat> {
    let n = source.total();
    if m_detected > n {
        return Err(Error::MOutOfRange { m: m_detected, n });
    }
    let t = loss.transmission_rat();
    let r = loss.reflection_rat();
    let mut p = Rat::from(crate::exact::binomial(u64::from(n), u64::from(m_detected)));
    for _ in 0..m_detected {
        p *= &t;
    }
    for _ in 0..(n - m_detected) {
        p *= &r;
    }
    Ok(p)
}

pub fn marginal_m(source: &SourceSpec, loss: &LossSpec, m_detected: u32) -> Result<f64> {
    Ok(rat_to_f64(&marginal_m_rat(source, loss, m_detected)?))
}

/// cos(x + sign*lambda) as a polynomial, with `x_dim` a symbolic angle and
/// `lam_dim` an integration variable.
fn cos_shifted(x_dim: usize, lam_dim: usize, sign: i16) -> PhasePoly {
    let mut p = PhasePoly::zero();
    let half = Exact::new(rat(1, 2), Rat::zero());
    let mut e = [0i16; crate::poly::DIMS];
    e[x_dim] = 1;
    e[lam_dim] = sign;
    p.add_term(e, half.clone());
    let mut f = [0i16; crate::poly::DIMS];
    f[x_dim] = -1;
    f[lam_dim] = -sign;
    p.add_term(f, half);
    p
}

/// cos(lam_dim) as a polynomial.
fn cos_var(lam_dim: usize) -> PhasePoly {
    let mut p = PhasePoly::zero();
    let half = Exact::new(rat(1, 2), Rat::zero());
    let mut e = [0i16; crate::poly::DIMS];
    e[lam_dim] = 1;
    p.add_term(e, half.clone());
    e[lam_dim] = -1;
    p.add_term(e, half);
    p
}

fn add_scaled(a: &PhasePoly, b: &PhasePoly, sign: i64) -> PhasePoly {
    let mut out = a.clone();
    let mut sb = b.clone();
    sb.scale(&Exact::new(Rat::from_integer(sign.into()), Rat::zero()));
    out.add_assign(&sb);
    out
}

/// Probability of detecting `outcome` (total M <= N) in the four-channel
/// interferometer when N - M particles are lost, as an exact polynomial in
/// the settings. The route depends on the loss placement:
///
/// * `AtSources`: closed two-variable constant-term formula; the diverted
///   particles are summed analytically.
/// * `AtDetectors`: explicit sum of the eight-channel network over all
///   diverted-count records.
/// * `None`: plain lossless probability; requires M = N.
pub fn probability_lossy_parts(
    source: &SourceSpec,
    outcome: &OutcomeCounts,
    loss: &LossSpec,
) -> Result<PhasePoly> {
    if source.n_sources() != 2 {
        return Err(Error::SourceArity {
            got: source.n_sources(),
            expected: 2,
            kind: "lossy interferometer".into(),
        });
    }
    if outcome.len() != 4 {
        return Err(Error::OutcomeArity {
            got: outcome.len(),
            expected: 4,
        });
    }
    let n = source.total();
    let m = outcome.total();
    if m > n {
        return Err(Error::TooManyDetected { m, n });
    }
    let angles = AngleSettings::new(0.0, 0.0); // rows are symbolic; angles unused
    match loss.placement() {
        Placement::None => {
            if m != n {
                return Err(Error::OutcomeTotal {
                    got: m,
                    expected: n,
                });
            }
            let map = build_network(Geometry::TwoSourceFour, angles, &LossSpec::none())?;
            probability_parts(&map, source, outcome)
        }
        Placement::AtSources => {
            let (na, nb) = (source.counts()[0], source.counts()[1]);
            let mc = outcome.counts();
            // Factors [cos(V1) +/- cos(zeta + V0)]^{m1,m2} etc., times the
            // pure-loss factor cos(V1)^{N-M}.
            let cl = cos_var(V1);
            let f1 = add_scaled(&cl, &cos_shifted(ZETA, V0, 1), 1);
            let f2 = add_scaled(&cl, &cos_shifted(ZETA, V0, 1), -1);
            let f3 = add_scaled(&cl, &cos_shifted(THETA, V0, -1), 1);
            let f4 = add_scaled(&cl, &cos_shifted(THETA, V0, -1), -1);
            let mut integrand = f1
                .pow(mc[0])
                .mul(&f2.pow(mc[1]))
                .mul(&f3.pow(mc[2]))
                .mul(&f4.pow(mc[3]));
            integrand = integrand.mul(&cl.pow(n - m));
            // Pick out the cos(d * V1) moment, d = n_beta - n_alpha.
            let d = i16::try_from(i64::from(nb) - i64::from(na)).expect("count fits i16");
            let plus = integrand.extract(&[V0, V1], &[0, d]);
            let minus = integrand.extract(&[V0, V1], &[0, -d]);
            let mut poly = add_scaled(&plus, &minus, 1);
            poly.scale_rat(&rat(1, 2));
            // Prefactor: N_a! N_b! 2^{N-2M} t^M (1-t)^{N-M} / ((N-M)! prod m_j!)
            let mut pref = factorial_rat(na) * factorial_rat(nb);
            let two = rat(2, 1);
            let exp = i64::from(n) - 2 * i64::from(m);
            if exp >= 0 {
                for _ in 0..exp {
                    pref *= &two;
                }
            } else {
                for _ in 0..(-exp) {
                    pref /= &two;
                }
            }
            let t = loss.transmission_rat();
            let r = loss.reflection_rat();
            for _ in 0..m {
                pref *= &t;
            }
            for _ in 0..(n - m) {
                pref *= &r;
            }
            pref /= factorial_rat(n - m);
            pref /= outcome.perm_factor();
            poly.scale_rat(&pref);
            Ok(poly)
        }
        Placement::AtDetectors => {
            let map = build_network(Geometry::DetectorLoss, angles, loss)?.extended();
            let mut acc = PhasePoly::zero();
            for diverted in compositions(n - m, 4) {
                let mut full = outcome.counts().to_vec();
                full.extend(diverted);
                let p = probability_parts(&map, source, &OutcomeCounts::new(full))?;
                acc.add_assign(&p);
            }
            Ok(acc)
        }
    }
}

pub fn probability_lossy(
    source: &SourceSpec,
    outcome: &OutcomeCounts,
    loss: &LossSpec,
    angles: &AngleSettings,
) -> Result<f64> {
    Ok(probability_lossy_parts(source, outcome, loss)?.eval_real(angles))
}

/// Unnormalized classical-field weight for one detection record: the phase
/// average of `prod_j intensity_j^{m_j} / m_j!` for two equal classical
/// waves with a uniformly random relative phase.
pub fn classical_limit_parts(outcome: &OutcomeCounts) -> Result<PhasePoly> {
    if outcome.len() != 4 {
        return Err(Error::OutcomeArity {
            got: outcome.len(),
            expected: 4,
        });
    }
    let mc = outcome.counts();
    let one = PhasePoly::one();
    let f1 = add_scaled(&one, &cos_shifted(ZETA, V0, 1), 1);
    let f2 = add_scaled(&one, &cos_shifted(ZETA, V0, 1), -1);
    let f3 = add_scaled(&one, &cos_shifted(THETA, V0, -1), 1);
    let f4 = add_scaled(&one, &cos_shifted(THETA, V0, -1), -1);
    let prod = f1
        .pow(mc[0])
        .mul(&f2.pow(mc[1]))
        .mul(&f3.pow(mc[2]))
        .mul(&f4.pow(mc[3]));
    let mut poly = prod.extract(&[V0], &[0]);
    poly.scale_rat(&(Rat::one() / outcome.perm_factor()));
    Ok(poly)
}

/// Classical-limit probability of `outcome` among all records with the same
/// total count, at the given settings.
///
/// The support total of the raw weights is 4^M / M! at every setting (the
/// four intensity factors sum to 4 and the phase average of a constant is
/// itself), so normalization is a fixed division.
pub fn classical_limit_probability(outcome: &OutcomeCounts, angles: &AngleSettings) -> Result<f64> {
    let m = outcome.total();
    let raw = classical_limit_parts(outcome)?.eval_real(angles);
    let mut total = 1.0;
    for k in 1..=m {
        total *= 4.0 / f64::from(k);
    }
    Ok(raw / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parity;

    fn fig1(zeta: f64, theta: f64) -> OutputMap {
        build_network(
            Geometry::TwoSourceFour,
            AngleSettings::new(zeta, theta),
            &LossSpec::none(),
        )
        .unwrap()
    }

    #[test]
    fn matches_frozen_two_particle_table() {
        let map = fig1(0.9, -0.4);
        let source = SourceSpec::two(1, 1);
        let dist = distribution(&map, &source, &Support::FixedTotal(2)).unwrap();
        assert!((dist.get(&OutcomeCounts::new(vec![2, 0, 0, 0])).unwrap() - 0.125).abs() < 1e-14);
        let fringe = (1.0 + 0.5f64.cos()) / 8.0;
        assert!((dist.get(&OutcomeCounts::new(vec![1, 0, 1, 0])).unwrap() - fringe).abs() < 1e-14);
        assert_eq!(
            dist.get(&OutcomeCounts::new(vec![1, 1, 0, 0])).unwrap(),
            0.0
        );
        assert!((dist.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fixed_total_sums_to_exactly_one() {
        // Symbolic check: the sum of all probability polynomials is the
        // constant 1, not merely close to it.
        let map = fig1(0.0, 0.0);
        for (na, nb) in [(2, 1), (2, 2), (3, 1)] {
            let source = SourceSpec::two(na, nb);
            let parts =
                distribution_parts(&map, &source, &Support::FixedTotal(na + nb)).unwrap();
            let mut sum = PhasePoly::zero();
            for (_, p) in &parts {
                sum.add_assign(p);
            }
            assert_eq!(sum.as_constant(), Some(Exact::new(Rat::one(), Rat::zero())));
        }
    }

    #[test]
    fn opposite_settings_give_exact_parity_zeros() {
        // With theta = -zeta the singles pattern locks: records with odd
        // m_1 + m_3 are structurally impossible.
        let map = fig1(0.0, 0.0);
        for (na, nb) in [(1, 1), (2, 2), (3, 3)] {
            let source = SourceSpec::two(na, nb);
            for outcome in Support::FixedTotal(na + nb).outcomes(4) {
                let poly = probability_parts(&map, &source, &outcome).unwrap();
                let locked = poly.fold_dim(THETA, ZETA, -1);
                let odd = (outcome.counts()[0] + outcome.counts()[2]) % 2 == 1;
                if odd {
                    assert!(
                        locked.is_zero(),
                        "outcome {outcome} should vanish at theta=-zeta"
                    );
                }
            }
        }
    }

    #[test]
    fn quadrature_agrees_with_exact_path() {
        let map = fig1(0.7, 0.3);
        let source = SourceSpec::two(3, 2);
        for outcome in Support::FixedTotal(5).outcomes(4) {
            let exact = {
                let (poly, s2) = amplitude_parts(&map, &source, &outcome).unwrap();
                poly.eval(&map.angles) * rat_to_f64(&s2).sqrt()
            };
            let quad = amplitude_quadrature(&map, &source, &outcome).unwrap();
            assert!(
                (exact - quad).norm() < 1e-12,
                "outcome {outcome}: {exact} vs {quad}"
            );
        }
    }

    #[test]
    fn lossy_placements_agree_and_sum_to_one() {
        let source = SourceSpec::two(2, 1);
        let at_src = LossSpec::new(0.5, Placement::AtSources).unwrap();
        let at_det = LossSpec::new(0.5, Placement::AtDetectors).unwrap();
        let mut grand = PhasePoly::zero();
        for m in 0..=3u32 {
            let mut m_sum = PhasePoly::zero();
            for outcome in Support::FixedTotal(m).outcomes(4) {
                let a = probability_lossy_parts(&source, &outcome, &at_src).unwrap();
                let b = probability_lossy_parts(&source, &outcome, &at_det).unwrap();
                let diff = add_scaled(&a, &b, -1);
                assert!(
                    diff.is_zero(),
                    "placement mismatch at {outcome}: {}",
                    diff.deviation()
                );
                m_sum.add_assign(&a);
            }
            // Summed over a full fixed-M support the angles drop out and
            // the exact binomial marginal is left.
            let want = marginal_m_rat(&source, &at_src, m).unwrap();
            assert_eq!(
                m_sum.as_constant(),
                Some(Exact::new(want, Rat::zero())),
                "M = {m}"
            );
            grand.add_assign(&m_sum);
        }
        assert_eq!(grand.as_constant(), Some(Exact::new(Rat::one(), Rat::zero())));
    }

    #[test]
    fn lossless_placement_none_requires_full_detection() {
        let source = SourceSpec::two(1, 1);
        let partial = OutcomeCounts::new(vec![1, 0, 0, 0]);
        assert!(matches!(
            probability_lossy_parts(&source, &partial, &LossSpec::none()),
            Err(Error::OutcomeTotal { .. })
        ));
    }

    #[test]
    fn classical_limit_frozen_values() {
        let angles = AngleSettings::new(0.0, 0.0);
        // Raw weight of (1,0,1,0) at aligned settings is 3/2; the support
        // total for M = 2 is 4^2/2! = 8.
        let raw = classical_limit_parts(&OutcomeCounts::new(vec![1, 0, 1, 0]))
            .unwrap()
            .eval_real(&angles);
        assert!((raw - 1.5).abs() < 1e-14);
        let p = classical_limit_probability(&OutcomeCounts::new(vec![1, 0, 1, 0]), &angles)
            .unwrap();
        assert!((p - 1.5 / 8.0).abs() < 1e-14);
        let mut total = 0.0;
        for outcome in Support::FixedTotal(2).outcomes(4) {
            total += classical_limit_probability(&outcome, &angles).unwrap();
        }
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn classical_support_total_is_four_to_m_over_m_factorial() {
        // The fixed normalizer used by classical_limit_probability, shown
        // symbolically: the raw weights sum to the constant 4^M / M! at
        // every setting.
        for m in 1..=4u32 {
            let mut sum = PhasePoly::zero();
            for outcome in Support::FixedTotal(m).outcomes(4) {
                sum.add_assign(&classical_limit_parts(&outcome).unwrap());
            }
            let want = rat(4, 1).pow(m as i32) / factorial_rat(m);
            assert_eq!(
                sum.as_constant(),
                Some(crate::exact::Exact::new(want, Rat::zero())),
                "M={m}"
            );
        }
    }

    #[test]
    fn marginal_is_binomial() {
        let source = SourceSpec::two(2, 2);
        let loss = LossSpec::new(0.25, Placement::AtSources).unwrap();
        assert_eq!(
            marginal_m_rat(&source, &loss, 4).unwrap(),
            rat(1, 256)
        );
        assert_eq!(
            marginal_m_rat(&source, &loss, 0).unwrap(),
            rat(81, 256)
        );
        let sum: Rat = (0..=4)
            .map(|m| marginal_m_rat(&source, &loss, m).unwrap())
            .fold(Rat::zero(), |a, b| a + b);
        assert_eq!(sum, Rat::one());
        assert!(marginal_m_rat(&source, &loss, 5).is_err());
    }

    #[test]
    fn parity_product_tracks_correlator_sign() {
        let map = fig1(0.2, 0.2);
        let source = SourceSpec::two(2, 2);
        let dist = distribution(&map, &source, &Support::FixedTotal(4)).unwrap();
        let mut e = 0.0;
        for (outcome, p) in &dist.entries {
            let (a, b) = parity(outcome);
            e += f64::from(a) * f64::from(b) * p;
        }
        // cos^4((zeta+theta)/2) at zeta + theta = 0.4
        let want = (0.2f64).cos().powi(4);
        assert!((e - want).abs() < 1e-12, "{e} vs {want}");
    }
}
