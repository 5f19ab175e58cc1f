//! Dormand-Prince 5(4) for two-dimensional first-order systems.
//!
//! Only what the Jacobi equation `f'' = -K f` needs: adaptive steps, every
//! accepted step recorded so callers can build their own dense output.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

pub type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    /// Upper bound on a step relative to the current abscissa, `h ≤ max_rel·max(t, 1)`.
    pub max_rel: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            h_init: 1e-4,
            h_min: 1e-14,
            max_rel: 0.05,
        }
    }
}

#[inline]
fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrate `y' = rhs(t, y)` from `(t0, y0)` to `t_end`, returning every accepted
/// step (including the initial point). `stop` lets the caller end early, e.g.
/// before overflow; the returned trajectory then ends at the last accepted step.
pub fn dopri5<F, S>(
    mut rhs: F,
    t0: f64,
    y0: State,
    t_end: f64,
    ctl: StepControl,
    mut stop: S,
) -> Result<Vec<(f64, State)>>
where
    F: FnMut(f64, &State) -> State,
    S: FnMut(f64, &State) -> bool,
{
    let mut out = Vec::new();
    out.push((t0, y0));
    let mut t = t0;
    let mut y = y0;
    let mut h = ctl.h_init.min(t_end - t0);
    let mut k1 = rhs(t, &y);

    while t < t_end {
        h = h.min(t_end - t).min(ctl.max_rel * t.max(1.0));
        if h < ctl.h_min {
            return Err(Error::IntegrationFailure { r: t, step: h });
        }
        let k2 = rhs(t + C2 * h, &axpy(&y, &[(A21, &k1)], h));
        let k3 = rhs(t + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = rhs(t + C4 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = rhs(
            t + C5 * h,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        );
        let k6 = rhs(
            t + h,
            &axpy(
                &y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                h,
            ),
        );
        let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = rhs(t + h, &y_new);

        let mut err = 0.0f64;
        for c in 0..2 {
            let e = h * (E1 * k1[c] + E3 * k3[c] + E4 * k4[c] + E5 * k5[c] + E6 * k6[c] + E7 * k7[c]);
            let sc = ctl.atol + ctl.rtol * math::abs(y[c]).max(math::abs(y_new[c]));
            err = err.max(math::abs(e) / sc);
        }
        if !err.is_finite() {
            h *= 0.25;
            continue;
        }

        if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
            out.push((t, y));
            if stop(t, &y) {
                break;
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * math::pow(err, -0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(out)
}
