//! Thin wrappers over `libm` so numerics are identical with or without `std`.

pub use libm::{ceil, cos, cosh, exp, expm1, log, log1p, pow, sin, sinh, sqrt, tanh, tgamma};

pub const PI: f64 = core::f64::consts::PI;
pub const LN_2: f64 = core::f64::consts::LN_2;

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn coth(x: f64) -> f64 {
    1.0 / tanh(x)
}

/// `x·coth(x)`, continuous at 0 where it equals 1.
#[inline]
pub fn x_coth_x(x: f64) -> f64 {
    if abs(x) < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 3.0 - x2 * x2 / 45.0
    } else {
        x / tanh(x)
    }
}
