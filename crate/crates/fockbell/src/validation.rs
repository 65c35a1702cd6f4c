//! Closed-form circular-integral values used as independent cross-checks.
//!
//! Two families cover everything the engines need: the Wallis-type moment
//! `K(n) = CT[cos^n x]` and the shifted moment
//! `J(m, d) = CT[cos^m x * e^{i d x}]`. Both are exact rationals; the
//! engine's normalization chains must reproduce them bit for bit.

use num::{One, Zero};

use crate::exact::{factorial_rat, rat, Rat};
use crate::poly::{PhasePoly, V1};

/// Constant term of `cos^n x`: zero for odd n, `2^{-n} n! / ((n/2)!)^2`
/// for even n.
pub fn wallis_k(n: u32) -> Rat {
    if n % 2 == 1 {
        return Rat::zero();
    }
    let h = n / 2;
    let mut v = factorial_rat(n) / (factorial_rat(h) * factorial_rat(h));
    for _ in 0..n {
        v /= rat(2, 1);
    }
    v
}

/// Constant term of `cos^m x * e^{i d x}`: zero unless d and m share
/// parity and |d| <= m, otherwise `2^{-m} m! / (((m+d)/2)! ((m-d)/2)!)`.
pub fn norm_j(m: u32, d: i64) -> Rat {
    let mi = i64::from(m);
    if d.abs() > mi || (mi - d) % 2 != 0 {
        return Rat::zero();
    }
    let plus = u32::try_from((mi + d) / 2).expect("in range");
    let minus = u32::try_from((mi - d) / 2).expect("in range");
    let mut v = factorial_rat(m) / (factorial_rat(plus) * factorial_rat(minus));
    for _ in 0..m {
        v /= rat(2, 1);
    }
    v
}

/// One named check with its outcome, for reporting.
#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn item(name: &str, passed: bool, detail: String) -> CheckItem {
    CheckItem {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn cos_poly(dim: usize) -> PhasePoly {
    let mut p = PhasePoly::zero();
    let mut e = [0i16; crate::poly::DIMS];
    e[dim] = 1;
    p.add_term(e, crate::exact::creal(rat(1, 2)));
    e[dim] = -1;
    p.add_term(e, crate::exact::creal(rat(1, 2)));
    p
}

/// `CT[cos^m x e^{idx}]` computed symbolically, for comparison with
/// [`norm_j`].
fn moment_by_extraction(m: u32, d: i64) -> Rat {
    let p = cos_poly(V1).pow(m);
    let dd = i16::try_from(d).expect("moment order fits i16");
    match p.extract(&[V1], &[dd]).as_constant() {
        Some(c) => {
            assert!(c.im.is_zero());
            c.re
        }
        None => Rat::zero(),
    }
}

/// Run the certification suite: closed-form moments against symbolic
/// extraction, the binomial pair-splitter identity, and the engine's
/// lossless and lossy normalization chains up to `n_max` particles.
pub fn run_all(n_max: u32) -> Vec<CheckItem> {
    use crate::engine;
    use crate::model::{
        build_network, compositions, AngleSettings, Geometry, LossSpec, OutcomeCounts, Placement,
        SourceSpec, Support,
    };

    let mut out = Vec::new();

    // Moments against symbolic extraction.
    let mut worst = String::new();
    let mut ok = true;
    for m in 0..=12u32 {
        for d in -(i64::from(m))..=i64::from(m) {
            if moment_by_extraction(m, d) != norm_j(m, d) {
                ok = false;
                worst = format!("J({m},{d})");
            }
        }
        if wallis_k(m) != norm_j(m, 0) {
            ok = false;
            worst = format!("K({m})");
        }
    }
    out.push(item(
        "moments: closed forms equal symbolic extraction",
        ok,
        if ok { "m <= 12, all d".into() } else { worst },
    ));

    // Pair-splitter identity:
    // sum_{m1+m2=mA} [cos L + cos f]^{m1} [cos L - cos f]^{m2} / (m1! m2!)
    //   = (2 cos L)^{mA} / mA!
    let mut ok = true;
    for ma in 0..=8u32 {
        let cl = cos_poly(V1);
        let cf = cos_poly(crate::poly::ZETA);
        let plus = {
            let mut p = cl.clone();
            p.add_assign(&cf);
            p
        };
        let minus = {
            let mut p = cl.clone();
            let mut n = cf.clone();
            n.scale(&crate::exact::gauss(-1, 0));
            p.add_assign(&n);
            p
        };
        let mut lhs = PhasePoly::zero();
        for m1 in 0..=ma {
            let m2 = ma - m1;
            let mut term = plus.pow(m1).mul(&minus.pow(m2));
            term.scale_rat(&(Rat::one() / (factorial_rat(m1) * factorial_rat(m2))));
            lhs.add_assign(&term);
        }
        let mut rhs = cl.pow(ma);
        let mut two_pow = Rat::one();
        for _ in 0..ma {
            two_pow *= rat(2, 1);
        }
        rhs.scale_rat(&(two_pow / factorial_rat(ma)));
        rhs.scale(&crate::exact::gauss(-1, 0));
        lhs.add_assign(&rhs);
        if !lhs.is_zero() {
            ok = false;
        }
    }
    out.push(item(
        "pair splitter: binomial collapse identity",
        ok,
        "mA <= 8".into(),
    ));

    // Lossless chain: the distribution's symbolic sum is the constant 1.
    let angles = AngleSettings::new(0.0, 0.0);
    let map = build_network(Geometry::TwoSourceFour, angles, &LossSpec::none()).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for na in 0..=n_max {
        for nb in 0..=(n_max - na) {
            if na + nb == 0 {
                continue;
            }
            let source = SourceSpec::two(na, nb);
            let mut sum = PhasePoly::zero();
            for outcome in Support::FixedTotal(na + nb).outcomes(4) {
                sum.add_assign(&engine::probability_parts(&map, &source, &outcome).unwrap());
            }
            let is_one = sum
                .as_constant()
                .is_some_and(|c| c.re.is_one() && c.im.is_zero());
            if !is_one {
                ok = false;
                detail = format!("({na},{nb})");
            }
        }
    }
    out.push(item(
        "lossless chain: probabilities sum to exactly 1",
        ok,
        if ok {
            format!("all splits with N <= {n_max}")
        } else {
            detail
        },
    ));

    // Lossy chain: fixed-M totals equal the exact binomial marginal.
    let mut ok = true;
    let mut detail = String::new();
    for t in [rat(1, 4), rat(1, 2), rat(3, 4)] {
        let loss = LossSpec::new(crate::exact::rat_to_f64(&t), Placement::AtSources).unwrap();
        let lossy_n = n_max.min(6);
        for na in 0..=lossy_n {
            for nb in 0..=(lossy_n - na) {
                if na + nb == 0 {
                    continue;
                }
                let source = SourceSpec::two(na, nb);
                for m in 0..=(na + nb) {
                    let mut sum = PhasePoly::zero();
                    for c in compositions(m, 4) {
                        let outcome = OutcomeCounts::new(c);
                        sum.add_assign(
                            &engine::probability_lossy_parts(&source, &outcome, &loss).unwrap(),
                        );
                    }
                    let want = engine::marginal_m_rat(&source, &loss, m).unwrap();
                    let matches = sum
                        .as_constant()
                        .is_some_and(|c| c.re == want && c.im.is_zero());
                    if !matches {
                        ok = false;
                        detail = format!("({na},{nb}) M={m} t={t}");
                    }
                }
            }
        }
    }
    out.push(item(
        "lossy chain: fixed-M totals equal binomial marginals",
        ok,
        if ok {
            "t in {1/4, 1/2, 3/4}".into()
        } else {
            detail
        },
    ));

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wallis_values() {
        assert_eq!(wallis_k(0), Rat::one());
        assert_eq!(wallis_k(1), Rat::zero());
        assert_eq!(wallis_k(2), rat(1, 2));
        assert_eq!(wallis_k(4), rat(3, 8));
        assert_eq!(wallis_k(6), rat(5, 16));
    }

    #[test]
    fn shifted_moment_values() {
        assert_eq!(norm_j(3, 1), rat(3, 8));
        assert_eq!(norm_j(3, 3), rat(1, 8));
        assert_eq!(norm_j(3, -3), rat(1, 8));
        assert_eq!(norm_j(3, 0), Rat::zero()); // parity mismatch
        assert_eq!(norm_j(2, 4), Rat::zero()); // |d| > m
        assert_eq!(norm_j(4, 0), wallis_k(4));
        // m = d: single surviving term, 2^{-m}.
        assert_eq!(norm_j(5, 5), rat(1, 32));
    }

    #[test]
    fn normalization_identity_is_rational() {
        // N_a! N_b! / N! * 2^N * J(N, N_b - N_a) == 1 for every split.
        for na in 0u32..=6 {
            for nb in 0u32..=6 {
                let n = na + nb;
                if n == 0 {
                    continue;
                }
                let mut v = factorial_rat(na) * factorial_rat(nb) / factorial_rat(n);
                for _ in 0..n {
                    v *= rat(2, 1);
                }
                v *= norm_j(n, i64::from(nb) - i64::from(na));
                assert!(v.is_one(), "({na},{nb})");
            }
        }
    }

    #[test]
    fn suite_passes_at_small_n() {
        for check in run_all(4) {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }
}
