//! Exact scalar arithmetic: Gaussian rationals (complex numbers with
//! `BigRational` parts) plus small combinatorial helpers.
//!
//! All amplitudes in this crate factor as `sqrt(positive rational) *
//! (Gaussian rational in e^{i*angle} monomials)`, so keeping coefficients in
//! `Complex<BigRational>` makes every cancellation exact: a probability that
//! vanishes, vanishes to the empty polynomial and not to 1e-17.

use num::bigint::BigInt;
use num::complex::Complex64;
use num::{BigRational, One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rat = BigRational;
/// Exact complex scalar: re + i*im with rational parts.
pub type Exact = num::Complex<Rat>;

/// `n/d` as an exact rational.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as an exact rational.
pub fn rint(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

/// Real rational as an exact complex scalar.
pub fn creal(re: Rat) -> Exact {
    Exact::new(re, Rat::zero())
}

/// Purely imaginary rational as an exact complex scalar.
pub fn cimag(im: Rat) -> Exact {
    Exact::new(Rat::zero(), im)
}

/// Gaussian integer `a + b i` as an exact complex scalar.
pub fn gauss(a: i64, b: i64) -> Exact {
    Exact::new(rint(a), rint(b))
}

/// n! as a big integer.
pub fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=u64::from(n) {
        acc *= k;
    }
    acc
}

/// n! as an exact rational.
pub fn factorial_rat(n: u32) -> Rat {
    Rat::from(factorial(n))
}

/// Binomial coefficient C(n, k) as a big integer (0 when k > n).
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Exact conversion of an f64 to a rational; the rational equals the float
/// bit-for-bit. Panics on non-finite input.
pub fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float required")
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().expect("rational out of f64 range")
}

pub fn exact_to_c64(x: &Exact) -> Complex64 {
    Complex64::new(rat_to_f64(&x.re), rat_to_f64(&x.im))
}

/// |x|_1 = |re| + |im|; a cheap exact upper bound on the modulus, used for
/// deviation reporting where only "exactly zero or not" matters.
pub fn one_norm(x: &Exact) -> Rat {
    x.re.abs() + x.im.abs()
}

/// Exact square root of a nonnegative rational, when both numerator and
/// denominator are perfect squares.
pub fn sqrt_rat_exact(x: &Rat) -> Option<Rat> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer(), x.denom());
    let (sn, sd) = (n.sqrt(), d.sqrt());
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(Rat::new(sn, sd))
    } else {
        None
    }
}
