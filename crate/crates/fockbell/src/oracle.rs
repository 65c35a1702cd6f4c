//! Brute-force reference implementation.
//!
//! Amplitudes are computed by expanding each detector-mode operator power
//! over all ways of drawing its particles from the individual sources, with
//! multinomial weights, and keeping the assignments that use up every source
//! exactly. This shares the row/outcome types with the main engine but none
//! of its algebraic machinery (no constant-term extraction), which is the
//! point: agreement between the two is a meaningful check.
//!
//! The enumeration is exponential in N, so anything above a small particle
//! count is refused rather than attempted.

use num::complex::Complex64;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{factorial, factorial_rat, rat_to_f64, Exact, Rat};
use crate::model::{Distribution, OutcomeCounts, OutputMap, SourceSpec, Support};
use crate::poly::{Exponents, PhasePoly, DIMS};

/// Largest total particle number the oracle will enumerate.
pub const ORACLE_LIMIT: u32 = 12;

struct ModeEntry {
    /// Per-source monomial (exponents, coefficient), or None for a zero
    /// coupling. Rows are required to be monomial, which every built-in
    /// geometry satisfies.
    g: Vec<Option<(Exponents, Exact)>>,
}

fn mode_entries(map: &OutputMap) -> Vec<ModeEntry> {
    map.rows
        .iter()
        .map(|row| ModeEntry {
            g: row
                .g
                .iter()
                .map(|p| {
                    assert!(p.num_terms() <= 1, "oracle requires monomial couplings");
                    p.iter().next().map(|(e, c)| (*e, c.clone()))
                })
                .collect(),
        })
        .collect()
}

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
    let n = source.total();
    if outcome.total() != n {
        return Err(Error::OutcomeTotal {
            got: outcome.total(),
            expected: n,
        });
    }
    if n > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            n,
            limit: ORACLE_LIMIT,
        });
    }
    Ok(())
}

/// Amplitude as `sqrt(scale2) * poly(settings)`: the polynomial carries the
/// setting-angle dependence with Gaussian-rational coefficients, and
/// `scale2` collects source factorials and row normalizations.
pub fn oracle_amplitude_parts(
    map: &OutputMap,
    source: &SourceSpec,
    outcome: &OutcomeCounts,
) -> Result<(PhasePoly, Rat)> {
    validate(map, source, outcome)?;
    let entries = mode_entries(map);
    let mut remaining: Vec<u32> = source.counts().to_vec();
    let mut poly = PhasePoly::zero();
    assign_modes(
        &entries,
        outcome.counts(),
        0,
        &mut remaining,
        &Rat::one(),
        [0i16; DIMS],
        Exact::new(Rat::one(), Rat::zero()),
        &mut poly,
    );
    let mut scale2 = Rat::one();
    for &nsrc in source.counts() {
        scale2 *= factorial_rat(nsrc);
    }
    for (row, &mj) in map.rows.iter().zip(outcome.counts()) {
        for _ in 0..mj {
            scale2 *= &row.scale2;
        }
    }
    Ok((poly, scale2))
}

/// Depth-first over detectors; at each detector, split its count over the
/// sources every possible way. Because each coupling is a monomial, a full
/// assignment contributes a single term `weight * coeff * e^{i k . angles}`.
#[allow(clippy::too_many_arguments)]
fn assign_modes(
    entries: &[ModeEntry],
    counts: &[u32],
    j: usize,
    remaining: &mut [u32],
    weight: &Rat,
    exps: Exponents,
    coeff: Exact,
    out: &mut PhasePoly,
) {
    if coeff.is_zero() {
        return;
    }
    if j == entries.len() {
        if remaining.iter().all(|&r| r == 0) {
            out.add_term(exps, Exact::new(weight * &coeff.re, weight * &coeff.im));
        }
        return;
    }
    let mj = counts[j];
    let ns = remaining.len();
    // Enumerate compositions of mj over the sources.
    let mut pick = vec![0u32; ns];
    split_count(
        entries, counts, j, remaining, weight, exps, coeff, out, mj, 0, &mut pick,
    );
}

#[allow(clippy::too_many_arguments)]
fn split_count(
    entries: &[ModeEntry],
    counts: &[u32],
    j: usize,
    remaining: &mut [u32],
    weight: &Rat,
    exps: Exponents,
    coeff: Exact,
    out: &mut PhasePoly,
    left: u32,
    s: usize,
    pick: &mut [u32],
) {
    let ns = remaining.len();
    if s == ns {
        if left != 0 {
            return;
        }
        // Multinomial weight m_j! / prod_s pick_s!.
        let mut w = weight * factorial_rat(counts[j]);
        let mut e = exps;
        let mut c = coeff;
        for (src, &p) in pick.iter().enumerate() {
            if p == 0 {
                continue;
            }
            w /= factorial_rat(p);
            let Some((ge, gc)) = &entries[j].g[src] else {
                return; // zero coupling used: whole branch dies
            };
            for d in 0..DIMS {
                e[d] += ge[d] * p as i16;
            }
            for _ in 0..p {
                c = c * gc.clone();
            }
        }
        for (src, &p) in pick.iter().enumerate() {
            remaining[src] -= p;
        }
        assign_modes(entries, counts, j + 1, remaining, &w, e, c, out);
        for (src, &p) in pick.iter().enumerate() {
            remaining[src] += p;
        }
        return;
    }
    let cap = left.min(remaining[s]);
    for p in 0..=cap {
        pick[s] = p;
        split_count(
            entries,
            counts,
            j,
            remaining,
            weight,
            exps,
            coeff.clone(),
            out,
            left - p,
            s + 1,
            pick,
        );
    }
    pick[s] = 0;
}

/// Numeric amplitude at the map's own settings.
pub fn oracle_amplitude(
    map: &OutputMap,
    source: &SourceSpec,
    outcome: &OutcomeCounts,
) -> Result<Complex64> {
    let (poly, scale2) = oracle_amplitude_parts(map, source, outcome)?;
    Ok(poly.eval(&map.angles) * rat_to_f64(&scale2).sqrt())
}

/// Probability as an exact hermitian polynomial in the setting angles:
/// `|amplitude|^2 / prod_j m_j!`.
pub fn oracle_probability_parts(
    map: &OutputMap,
    source: &SourceSpec,
    outcome: &OutcomeCounts,
) -> Result<PhasePoly> {
    let (poly, scale2) = oracle_amplitude_parts(map, source, outcome)?;
    let mut prob = poly.conj().mul(&poly);
    prob.scale_rat(&(scale2 / outcome.perm_factor()));
    Ok(prob)
}

pub fn oracle_probability(
    map: &OutputMap,
    source: &SourceSpec,
    outcome: &OutcomeCounts,
) -> Result<f64> {
    Ok(oracle_probability_parts(map, source, outcome)?.eval_real(&map.angles))
}

/// Full outcome distribution over all detector records with `sum m_j = N`.
pub fn oracle_distribution(map: &OutputMap, source: &SourceSpec) -> Result<Distribution> {
    let n = source.total();
    let support = Support::FixedTotal(n);
    let mut entries = Vec::new();
    for outcome in support.outcomes(map.rows.len()) {
        let p = oracle_probability(map, source, &outcome)?;
        entries.push((outcome, p));
    }
    Ok(Distribution { support, entries })
}

/// n! as f64; convenience for tests.
pub fn factorial_f64(n: u32) -> f64 {
    rat_to_f64(&Rat::from(factorial(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::model::{build_network, AngleSettings, Geometry, LossSpec, Placement};

    fn fig1(zeta: f64, theta: f64) -> OutputMap {
        build_network(
            Geometry::TwoSourceFour,
            AngleSettings::new(zeta, theta),
            &LossSpec::none(),
        )
        .unwrap()
    }

    #[test]
    fn one_particle_splits_evenly() {
        let map = fig1(0.0, 0.0);
        let source = SourceSpec::two(1, 0);
        let amp = oracle_amplitude(&map, &source, &OutcomeCounts::new(vec![1, 0, 0, 0])).unwrap();
        assert!((amp - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        for outcome in Support::FixedTotal(1).outcomes(4) {
            let p = oracle_probability(&map, &source, &outcome).unwrap();
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn two_particle_distribution_shows_pair_interference() {
        // One particle per source: bunched records are flat at 1/8, while
        // cross-apparatus coincidences carry the full cos(zeta + theta)
        // fringe. Same-apparatus coincidences are impossible.
        for (zeta, theta) in [(0.0f64, 0.0f64), (0.3, 1.1), (-2.0, 0.7)] {
            let c = (zeta + theta).cos();
            let map = fig1(zeta, theta);
            let source = SourceSpec::two(1, 1);
            let dist = oracle_distribution(&map, &source).unwrap();
            let expect = [
                (vec![2, 0, 0, 0], 0.125),
                (vec![0, 2, 0, 0], 0.125),
                (vec![0, 0, 2, 0], 0.125),
                (vec![0, 0, 0, 2], 0.125),
                (vec![1, 0, 1, 0], (1.0 + c) / 8.0),
                (vec![0, 1, 0, 1], (1.0 + c) / 8.0),
                (vec![1, 0, 0, 1], (1.0 - c) / 8.0),
                (vec![0, 1, 1, 0], (1.0 - c) / 8.0),
                (vec![1, 1, 0, 0], 0.0),
                (vec![0, 0, 1, 1], 0.0),
            ];
            for (m, want) in expect {
                let p = dist.get(&OutcomeCounts::new(m)).unwrap();
                assert!((p - want).abs() < 1e-14, "({zeta},{theta}): {p} vs {want}");
            }
            assert!((dist.total() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn bunching_amplitude_value() {
        let map = fig1(0.0, 0.0);
        let source = SourceSpec::two(1, 1);
        let amp = oracle_amplitude(&map, &source, &OutcomeCounts::new(vec![2, 0, 0, 0])).unwrap();
        assert!((amp - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        // Parts view: poly = -2 e^{i zeta}, scale2 = 1/16.
        let (poly, scale2) =
            oracle_amplitude_parts(&map, &source, &OutcomeCounts::new(vec![2, 0, 0, 0])).unwrap();
        assert_eq!(scale2, rat(1, 16));
        assert_eq!(poly.num_terms(), 1);
    }

    #[test]
    fn rejects_bad_outcomes_and_large_n() {
        let map = fig1(0.0, 0.0);
        let source = SourceSpec::two(1, 1);
        let short = OutcomeCounts::new(vec![1, 1, 0]);
        assert!(matches!(
            oracle_amplitude(&map, &source, &short),
            Err(Error::OutcomeArity { .. })
        ));
        let wrong_total = OutcomeCounts::new(vec![1, 1, 1, 0]);
        assert!(matches!(
            oracle_amplitude(&map, &source, &wrong_total),
            Err(Error::OutcomeTotal { got: 3, expected: 2 })
        ));
        let big = SourceSpec::two(7, 6);
        let outcome = OutcomeCounts::new(vec![13, 0, 0, 0]);
        assert!(matches!(
            oracle_amplitude(&map, &big, &outcome),
            Err(Error::OracleTooLarge { n: 13, limit: 12 })
        ));
    }

    #[test]
    fn hardy_unprimed_coincidence_probability() {
        let map = build_network(
            Geometry::HardyDD,
            AngleSettings::new(0.0, 0.0),
            &LossSpec::none(),
        )
        .unwrap();
        let source = SourceSpec::two(3, 3);
        let p = oracle_probability(&map, &source, &OutcomeCounts::new(vec![0, 3, 3, 0])).unwrap();
        assert!((p - 1.0 / 46656.0).abs() < 1e-18, "p = {p}");
        let dist = oracle_distribution(&map, &source).unwrap();
        assert!((dist.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lossy_extension_conserves_probability() {
        let loss = LossSpec::new(0.5, Placement::AtSources).unwrap();
        let map = build_network(Geometry::SourceLoss, AngleSettings::new(0.4, -0.2), &loss)
            .unwrap()
            .extended();
        let source = SourceSpec::two(2, 1);
        let dist = oracle_distribution(&map, &source).unwrap();
        assert!((dist.total() - 1.0).abs() < 1e-12);
    }
}
