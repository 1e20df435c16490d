//! Standard normal helpers with stable tails.

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// `Phi(x)`
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `1 - Phi(x)`, accurate in the upper tail.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`sf`] for `p` in (0, 1).
pub fn sf_inv(p: f64) -> f64 {
    let x = std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // one Halley step against the accurate erfc
    let f = sf(x) - p;
    let d = pdf(x);
    if d == 0.0 {
        return x;
    }
    let r = f / d;
    x + r / (1.0 - 0.5 * x * r)
}

/// Inverse of [`cdf`] for `p` in (0, 1).
pub fn cdf_inv(p: f64) -> f64 {
    -sf_inv(p)
}

/// Gaussian density with variance `t` at `x`.
#[inline]
pub fn pdf_t(x: f64, t: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (SQRT_2PI * t.sqrt())
}

/// Mills ratio `R(x) = sf(x) / pdf(x)`. Overflows to +inf for x below about -37.
pub fn mills(x: f64) -> f64 {
    if x > 5.0 {
        mills_cf(x)
    } else {
        sf(x) / pdf(x)
    }
}

/// Hazard `pdf(x) / sf(x) = 1 / R(x)`; finite everywhere, tends to 0 as x -> -inf.
pub fn hazard(x: f64) -> f64 {
    if x > 5.0 {
        1.0 / mills_cf(x)
    } else if x < -37.0 {
        0.0
    } else {
        pdf(x) / sf(x)
    }
}

/// `ln R(x)` without overflow.
pub fn ln_mills(x: f64) -> f64 {
    if x > 5.0 {
        mills_cf(x).ln()
    } else if x < -5.0 {
        sf(x).ln() + 0.5 * x * x + LN_SQRT_2PI
    } else {
        (sf(x) / pdf(x)).ln()
    }
}

// Lentz evaluation of R(x) = 1/(x+ 1/(x+ 2/(x+ 3/(x+ ...)))), x > 0.
fn mills_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// `ln(e^a + e^b)`
#[inline]
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}
