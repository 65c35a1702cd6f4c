//! Sparse Laurent polynomials in up to six phase variables with exact
//! Gaussian-rational coefficients.
//!
//! A term `c * e^{i(k0 v0 + k1 v1 + k2 v2 + k3 zeta + k4 theta + k5 chi)}`
//! is stored as `exponents -> c`. Dimensions 0..3 are integration variables
//! (one per source, or the auxiliary pair of a loss integral); dimensions
//! 3..6 carry the interferometer setting angles symbolically. "Integrating"
//! over a variable on the unit circle is coefficient extraction.

use std::collections::BTreeMap;
use std::fmt;

use num::complex::Complex64;
use num::Zero;

use crate::exact::{exact_to_c64, one_norm, rat_to_f64, Exact, Rat};
use crate::model::AngleSettings;

pub const DIMS: usize = 6;
/// Integration variables (one per source in amplitude work).
pub const V0: usize = 0;
pub const V1: usize = 1;
pub const V2: usize = 2;
/// Symbolic setting angles.
pub const ZETA: usize = 3;
pub const THETA: usize = 4;
pub const CHI: usize = 5;

pub type Exponents = [i16; DIMS];

#[derive(Clone, PartialEq, Eq, Default)]
pub struct PhasePoly {
    terms: BTreeMap<Exponents, Exact>,
}

impl PhasePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Exact) -> Self {
        Self::monomial([0; DIMS], c)
    }

    pub fn one() -> Self {
        Self::constant(Exact::new(Rat::from_integer(1.into()), Rat::zero()))
    }

    pub fn monomial(exp: Exponents, c: Exact) -> Self {
        let mut p = Self::default();
        p.add_term(exp, c);
        p
    }

    /// e^{i * dim} as a polynomial.
    pub fn unit(dim: usize) -> Self {
        let mut exp = [0; DIMS];
        exp[dim] = 1;
        Self::monomial(exp, Exact::new(Rat::from_integer(1.into()), Rat::zero()))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Exponents, &Exact)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, exp: Exponents, c: Exact) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exp) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &PhasePoly) {
        for (exp, c) in &other.terms {
            self.add_term(*exp, c.clone());
        }
    }

    pub fn scale(&mut self, c: &Exact) {
        if c.is_zero() {
            self.terms.clear();
            return;
        }
        for v in self.terms.values_mut() {
            *v = v.clone() * c.clone();
        }
    }

    pub fn scale_rat(&mut self, r: &Rat) {
        self.scale(&Exact::new(r.clone(), Rat::zero()));
    }

    pub fn mul(&self, other: &PhasePoly) -> PhasePoly {
        let mut out = PhasePoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut exp = *ea;
                for d in 0..DIMS {
                    exp[d] = exp[d]
                        .checked_add(eb[d])
                        .expect("phase exponent overflowed i16");
                }
                out.add_term(exp, ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> PhasePoly {
        let mut acc = PhasePoly::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Complex conjugate: conjugate coefficients, negate every exponent
    /// (the variables are real phases).
    pub fn conj(&self) -> PhasePoly {
        let mut out = PhasePoly::zero();
        for (exp, c) in &self.terms {
            let neg = std::array::from_fn(|d| -exp[d]);
            out.add_term(neg, c.conj());
        }
        out
    }

    /// Keep only terms whose exponents at `dims` equal `want`, then zero
    /// those dimensions out. This is exact integration: the coefficient of
    /// `e^{i sum want_d * dim_d}` survives averaging over those circles.
    pub fn extract(&self, dims: &[usize], want: &[i16]) -> PhasePoly {
        assert_eq!(dims.len(), want.len());
        let mut out = PhasePoly::zero();
        for (exp, c) in &self.terms {
            if dims.iter().zip(want).all(|(&d, &w)| exp[d] == w) {
                let mut e = *exp;
                for &d in dims {
                    e[d] = 0;
                }
                out.add_term(e, c.clone());
            }
        }
        out
    }

    /// Replace variable `from` by `sign * to`: each term's `from` exponent is
    /// folded onto `to`. Used e.g. to specialize theta = -zeta symbolically.
    pub fn fold_dim(&self, from: usize, to: usize, sign: i16) -> PhasePoly {
        let mut out = PhasePoly::zero();
        for (exp, c) in &self.terms {
            let mut e = *exp;
            let k = e[from];
            e[from] = 0;
            e[to] = e[to]
                .checked_add(sign * k)
                .expect("phase exponent overflowed i16");
            out.add_term(e, c.clone());
        }
        out
    }

    /// Numeric value with the setting dimensions fixed by `angles`.
    /// Panics if any integration dimension is still present.
    pub fn eval(&self, angles: &AngleSettings) -> Complex64 {
        let chi = angles.chi().unwrap_or(0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (exp, c) in &self.terms {
            assert!(
                exp[V0] == 0 && exp[V1] == 0 && exp[V2] == 0,
                "eval on a polynomial with unintegrated variables"
            );
            assert!(
                exp[CHI] == 0 || angles.chi().is_some(),
                "polynomial depends on chi but the settings carry none"
            );
            let phase = f64::from(exp[ZETA]) * angles.zeta()
                + f64::from(exp[THETA]) * angles.theta()
                + f64::from(exp[CHI]) * chi;
            acc += exact_to_c64(c) * Complex64::new(0.0, phase).exp();
        }
        acc
    }

    /// Value of a polynomial known to be real for all angles (hermitian term
    /// structure). The imaginary part must vanish to rounding.
    pub fn eval_real(&self, angles: &AngleSettings) -> f64 {
        let z = self.eval(angles);
        debug_assert!(
            z.im.abs() <= 1e-12 * (1.0 + z.re.abs()),
            "eval_real on a non-real polynomial: im = {}",
            z.im
        );
        z.re
    }

    /// True when the terms pair up as `c` at `+exp` with `conj(c)` at `-exp`;
    /// such a polynomial is real-valued for every real angle assignment.
    pub fn is_hermitian(&self) -> bool {
        self.terms.iter().all(|(exp, c)| {
            let neg = std::array::from_fn(|d| -exp[d]);
            self.terms.get(&neg).is_some_and(|m| *m == c.conj())
        })
    }

    /// If the polynomial is a constant (only the zero exponent), return it.
    pub fn as_constant(&self) -> Option<Exact> {
        match self.terms.len() {
            0 => Some(Exact::new(Rat::zero(), Rat::zero())),
            1 => self.terms.get(&[0; DIMS]).cloned(),
            _ => None,
        }
    }

    /// Sum of coefficient 1-norms, as a float. Zero iff the polynomial is
    /// exactly zero; used to report deviations of identities.
    pub fn deviation(&self) -> f64 {
        let mut acc = Rat::zero();
        for c in self.terms.values() {
            acc += one_norm(c);
        }
        rat_to_f64(&acc)
    }

    /// Largest absolute exponent appearing on dimension `dim`.
    pub fn max_degree(&self, dim: usize) -> i16 {
        self.terms
            .keys()
            .map(|e| e[dim].abs())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Debug for PhasePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const NAMES: [&str; DIMS] = ["v0", "v1", "v2", "zeta", "theta", "chi"];
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exp, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}+{}i)", c.re, c.im)?;
            for d in 0..DIMS {
                if exp[d] != 0 {
                    write!(f, "*e^({}i {})", exp[d], NAMES[d])?;
                }
            }
        }
        Ok(())
    }
}
