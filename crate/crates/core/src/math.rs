//! Scalar helpers for signed fractional powers.
//!
//! Fractional powers of negative bases are undefined in real arithmetic, so
//! every power of a signed quantity is computed on |x| with the sign
//! reapplied, and sign(0) = 0 throughout. This makes the origin an exact
//! fixed point of every vector field in the crate.

/// sign(x) with sign(0) = 0.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// |x|^e via exp(e·ln|x|), with the conventions 0^e = 0 (e > 0), 0^0 = 1.
#[inline]
pub fn pow_abs(x: f64, e: f64) -> f64 {
    let ax = libm::fabs(x);
    if ax == 0.0 {
        return if e > 0.0 {
            0.0
        } else if e == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
    }
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        ax
    } else {
        libm::exp(e * libm::log(ax))
    }
}

/// sign(x)·|x|^e, the odd power map.
#[inline]
pub fn signed_pow(x: f64, e: f64) -> f64 {
    sgn(x) * pow_abs(x, e)
}
