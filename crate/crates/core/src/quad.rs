//! Gauss-Legendre panels, adaptive bisection quadrature, and the closed tail
//! integrals used for log-power extrapolation.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Positive half of the 16-point Gauss-Legendre rule on [-1, 1] as (node, weight).
const GL16: [(f64, f64); 8] = [
    (0.09501250983763745, 0.18945061045506859),
    (0.2816035507792589, 0.1826034150449236),
    (0.45801677765722737, 0.16915651939500262),
    (0.6178762444026438, 0.14959598881657676),
    (0.755404408355003, 0.12462897125553403),
    (0.8656312023878318, 0.09515851168249259),
    (0.9445750230732326, 0.062253523938647706),
    (0.9894009349916499, 0.027152459411754037),
];

/// Number of nodes in [`gauss_nodes`].
pub const GAUSS_POINTS: usize = 16;

/// Nodes and weights of the 16-point rule mapped to `[a, b]`, in increasing order.
pub fn gauss_nodes(a: f64, b: f64) -> [(f64, f64); GAUSS_POINTS] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); GAUSS_POINTS];
    for (k, &(x, w)) in GL16.iter().enumerate() {
        out[7 - k] = (mid - half * x, half * w);
        out[8 + k] = (mid + half * x, half * w);
    }
    out
}

/// Single 16-point panel.
pub fn gauss16<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for &(x, w) in GL16.iter() {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Adaptive bisection driven by the difference between one panel and its two
/// halves. Returns `(value, error_estimate)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rtol: f64, atol: f64) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    const MAX_DEPTH: u32 = 48;
    const MAX_PANELS: usize = 1 << 16;

    let whole = gauss16(&mut f, a, b);
    let mut stack: Vec<(f64, f64, f64, u32)> = Vec::new();
    stack.push((a, b, whole, 0));
    let mut total = 0.0;
    let mut err_total = 0.0;
    let mut panels = 0usize;
    // Global estimate used to scale the local acceptance test.
    let scale = math::abs(whole);

    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        panels += 1;
        let mid = 0.5 * (lo + hi);
        let left = gauss16(&mut f, lo, mid);
        let right = gauss16(&mut f, mid, hi);
        let fine = left + right;
        let err = math::abs(fine - coarse);
        let width_share = math::abs(hi - lo) / math::abs(b - a);
        let allowed = (rtol * scale.max(math::abs(total + fine))).max(atol) * width_share.max(1e-3);
        if err <= allowed || depth >= MAX_DEPTH || !fine.is_finite() {
            if !fine.is_finite() || (depth >= MAX_DEPTH && err > allowed) {
                return Err(Error::QuadratureFailure {
                    a: lo,
                    b: hi,
                    estimate: err,
                });
            }
            total += fine;
            err_total += err;
        } else {
            if panels > MAX_PANELS {
                return Err(Error::QuadratureFailure {
                    a,
                    b,
                    estimate: err_total + err,
                });
            }
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok((total, err_total))
}

/// `∫₀^∞ e^{-λw} (1 + w/x0)^{-μ} dw` for `λ ≥ 0`, `x0 > 0`.
///
/// Returns `None` when the integral diverges (`λ = 0` and `μ ≤ 1`).
pub fn upper_tail(lambda: f64, mu: f64, x0: f64) -> Option<f64> {
    debug_assert!(x0 > 0.0);
    if lambda < 0.0 {
        return None;
    }
    if lambda == 0.0 {
        return if mu > 1.0 { Some(x0 / (mu - 1.0)) } else { None };
    }
    // Panels of geometrically growing width until the remainder is negligible.
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut width = (0.5 / lambda).min(0.5 * x0).max(1e-12);
    for _ in 0..4000 {
        let hi = lo + width;
        let part = gauss16(|w| math::exp(-lambda * w - mu * math::log1p(w / x0)), lo, hi);
        total += part;
        let edge = math::exp(-lambda * hi - mu * math::log1p(hi / x0));
        // Remaining mass is bounded by the value at the edge times an
        // exponential/power envelope.
        let envelope = edge
            * (1.0 / lambda).min(if mu > 1.0 {
                (x0 + hi) / (mu - 1.0)
            } else {
                f64::INFINITY
            });
        if envelope <= 1e-17 * total {
            return Some(total);
        }
        lo = hi;
        width *= 1.25;
    }
    Some(total)
}
