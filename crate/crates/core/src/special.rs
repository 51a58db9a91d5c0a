//! Error function family and normal-distribution helpers.
//!
//! `erf` uses the all-positive-term series for small arguments and the
//! scaled complementary function `erfcx(x) = exp(x^2) erfc(x)` uses a
//! Lentz-evaluated continued fraction for large ones, so tails stay accurate
//! in relative terms down to the underflow limit.

use crate::scalar::Scalar;

/// Boundary between the series and the continued fraction.
const SERIES_CUTOFF: f64 = 2.0;

fn erf_series<F: Scalar>(x: F) -> F {
    let eps = F::epsilon();
    let two_x2 = F::lit(2.0) * x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = F::one();
    for _ in 0..500 {
        term = term * two_x2 / (F::lit(2.0) * k + F::one());
        sum = sum + term;
        if term.abs() <= eps * sum.abs() {
            break;
        }
        k = k + F::one();
    }
    F::FRAC_2_SQRT_PI() * (-x * x).exp() * sum
}

/// `exp(x^2) * erfc(x)` for `x >= SERIES_CUTOFF`, continued fraction
/// `erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`.
fn erfcx_cf<F: Scalar>(x: F) -> F {
    let tiny = F::min_positive_value().sqrt();
    let eps = F::epsilon();
    let mut f = x;
    let mut c = x;
    let mut d = F::zero();
    for n in 1..2000 {
        let a = F::from_usize_lossy(n) * F::lit(0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - F::one()).abs() <= eps {
            break;
        }
    }
    F::FRAC_2_SQRT_PI() * F::lit(0.5) / f
}

pub fn erf<F: Scalar>(x: F) -> F {
    if x.abs() < F::lit(SERIES_CUTOFF) {
        erf_series(x)
    } else if x > F::zero() {
        F::one() - erfc(x)
    } else {
        erfc(-x) - F::one()
    }
}

pub fn erfc<F: Scalar>(x: F) -> F {
    if x >= F::lit(SERIES_CUTOFF) {
        erfcx_cf(x) * (-x * x).exp()
    } else if x <= -F::lit(SERIES_CUTOFF) {
        F::lit(2.0) - erfcx_cf(-x) * (-x * x).exp()
    } else {
        F::one() - erf_series(x)
    }
}

/// Natural log of `erfc(x)`, finite far into the upper tail.
pub fn ln_erfc<F: Scalar>(x: F) -> F {
    if x >= F::lit(SERIES_CUTOFF) {
        erfcx_cf(x).ln() - x * x
    } else {
        erfc(x).ln()
    }
}

/// Standard normal CDF.
pub fn norm_cdf<F: Scalar>(z: F) -> F {
    F::lit(0.5) * erfc(-z * F::FRAC_1_SQRT_2())
}

/// Log of the standard normal CDF.
pub fn ln_norm_cdf<F: Scalar>(z: F) -> F {
    F::lit(0.5).ln() + ln_erfc(-z * F::FRAC_1_SQRT_2())
}

/// Standard normal density.
pub fn norm_pdf<F: Scalar>(z: F) -> F {
    (-F::lit(0.5) * z * z).exp() / (F::TAU()).sqrt()
}

/// `a * ln(y)` with the convention `0 * ln(0) = 0`.
#[inline]
pub(crate) fn xlogy<F: Scalar>(a: F, y: F) -> F {
    if a == F::zero() {
        F::zero()
    } else {
        a * y.ln()
    }
}
