//! Improper-integral classification of warped metrics.
//!
//! All integrals are taken in the logarithmic variable `x = ln t` with
//! `L(x) = ln f(e^x)`. Inner integrals are carried in scaled form so that
//! nothing overflows even when `f` grows exponentially:
//!
//! * nested:  `Ĩ(x) = e^{-αL(x)} ∫_{e^x}^∞ f^α`, swept downward;
//! * swapped: `F̃(x) = e^{-βL(x)} ∫_1^{e^x} f^β`, swept upward.
//!
//! Beyond the horizon the warp is modelled by `t f'/f ≈ q + m / ln t`, fitted on
//! the last decade. The fit decides the verdict; the data region is evaluated by
//! either route and the model tail is added in closed or one-dimensional form.

use alloc::vec::Vec;

use crate::manifold::WarpedMetric;
use crate::math;
use crate::quad::{self, gauss_nodes};
use crate::{Error, Result};

/// Exponents within this distance of the critical value 1 are treated as
/// exactly critical, which makes the borderline case divergent.
pub const SNAP: f64 = 0.01;

/// Minimum horizon for which the tail fit is trusted.
pub const MIN_HORIZON: f64 = 100.0;

/// `ln` of the integrand below which the rest of the integral is dropped.
const NEGLIGIBLE_LOG: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Convergent,
    Divergent,
    Inconclusive,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Convergent => "convergent",
            Status::Divergent => "divergent",
            Status::Inconclusive => "inconclusive",
        }
    }
}

/// Log-power rate `t^{-q} (ln t)^{-m}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub q: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceVerdict {
    pub status: Status,
    /// Full integral; present iff convergent.
    pub value: Option<f64>,
    /// Swapped-order integral with both variables restricted to `[1, horizon]`.
    pub partial: f64,
    /// Spread of the extrapolated tail between the two fitting windows.
    pub tail_bound: f64,
    /// Fitted integrand rate: convergent iff `q > 1` or `q = 1, m > 1`.
    pub tail_rate: Rate,
    /// Fitted warp growth `t f'/f ≈ q + m / ln t`.
    pub warp_rate: Rate,
    /// Radius where the data region ends.
    pub horizon: f64,
    /// True when the integrand became negligible before the requested horizon.
    pub truncated: bool,
}

/// Nested-integral order for [`j_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `∫₁^∞ f^β(s) ∫_s^∞ f^α(t) dt ds`.
    Nested,
    /// `∫₁^∞ f^α(t) ∫₁^t f^β(s) ds dt`.
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PExponents {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CriteriaOptions {
    pub horizon: f64,
    /// Relative tail spread above which a convergent verdict is downgraded.
    pub tail_rtol: f64,
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        Self {
            horizon: 1e6,
            tail_rtol: 1e-2,
        }
    }
}

impl CriteriaOptions {
    pub fn with_horizon(horizon: f64) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }
}

/// `α = -(n-1)/(p-1)`, `β = (n-2p+1)/(p-1)` for `2 < p < n`.
pub fn p_exponents(n: u32, p: f64) -> Result<PExponents> {
    let nf = n as f64;
    if !(p > 2.0 && p < nf) {
        return Err(Error::OutOfRange {
            what: "p (must lie in (2, n))",
            value: p,
        });
    }
    let alpha = -(nf - 1.0) / (p - 1.0);
    // β is taken as the complement so the pair sums to -2 in floating point.
    let beta = -2.0 - alpha;
    Ok(PExponents { p, alpha, beta })
}

/// J criterion: `α = 1-n`, `β = n-3`.
pub fn j_integral(metric: &WarpedMetric, form: Form, horizon: f64) -> Result<ConvergenceVerdict> {
    j_integral_with(metric, form, CriteriaOptions::with_horizon(horizon))
}

pub fn j_integral_with(
    metric: &WarpedMetric,
    form: Form,
    opts: CriteriaOptions,
) -> Result<ConvergenceVerdict> {
    let n = metric.n() as f64;
    Ok(NestedTable::build(metric, 1.0 - n, n - 3.0, opts)?.verdict(form))
}

/// Barrier integral with the exponents of [`p_exponents`].
pub fn p_integral(metric: &WarpedMetric, p: f64, horizon: f64) -> Result<ConvergenceVerdict> {
    p_integral_with(metric, p, Form::Nested, CriteriaOptions::with_horizon(horizon))
}

pub fn p_integral_with(
    metric: &WarpedMetric,
    p: f64,
    form: Form,
    opts: CriteriaOptions,
) -> Result<ConvergenceVerdict> {
    let e = p_exponents(metric.n(), p)?;
    Ok(NestedTable::build(metric, e.alpha, e.beta, opts)?.verdict(form))
}

/// Reading of a parabolicity verdict. The volume test is sufficient only, so
/// there is no "non-parabolic" outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parabolicity {
    Parabolic,
    Inconclusive,
}

impl Parabolicity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Parabolicity::Parabolic => "parabolic (criterion met)",
            Parabolicity::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicityReport {
    pub verdict: ConvergenceVerdict,
    pub conclusion: Parabolicity,
}

/// Tests `∫^∞ (t / V(t))^{1/(p-1)} dt = ∞`.
pub fn parabolicity_check(metric: &WarpedMetric, p: f64, horizon: f64) -> Result<ParabolicityReport> {
    parabolicity_check_with(metric, p, CriteriaOptions::with_horizon(horizon))
}

pub fn parabolicity_check_with(
    metric: &WarpedMetric,
    p: f64,
    opts: CriteriaOptions,
) -> Result<ParabolicityReport> {
    if !(p > 1.0) {
        return Err(Error::OutOfRange {
            what: "p (must exceed 1)",
            value: p,
        });
    }
    let verdict = volume_integral(metric, p, opts)?;
    let conclusion = match verdict.status {
        Status::Divergent => Parabolicity::Parabolic,
        _ => Parabolicity::Inconclusive,
    };
    Ok(ParabolicityReport { verdict, conclusion })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    J,
    PIntegral { p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEstimate {
    /// Midpoint of the final bracket.
    pub c: f64,
    pub lower: f64,
    pub upper: f64,
    /// Every `(c, status)` evaluated, in order.
    pub evaluations: Vec<(f64, Status)>,
}

/// Bisection for the parameter where the verdict of `criterion` flips.
pub fn threshold_scan<F>(
    family: F,
    criterion: Criterion,
    range: (f64, f64),
    tolerance: f64,
    horizon: f64,
) -> Result<ThresholdEstimate>
where
    F: Fn(f64) -> Result<WarpedMetric>,
{
    let (mut lo, mut hi) = range;
    if !(lo < hi) || !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(
            "threshold scan needs lo < hi and tolerance > 0",
        ));
    }
    let mut evaluations = Vec::new();
    let mut classify = |c: f64| -> Result<Status> {
        let m = family(c)?;
        let v = match criterion {
            Criterion::J => j_integral(&m, Form::Swapped, horizon)?,
            Criterion::PIntegral { p } => {
                p_integral_with(&m, p, Form::Swapped, CriteriaOptions::with_horizon(horizon))?
            }
        };
        evaluations.push((c, v.status));
        if v.status == Status::Inconclusive {
            return Err(Error::ScanInconclusive { c });
        }
        Ok(v.status)
    };
    let s_lo = classify(lo)?;
    let s_hi = classify(hi)?;
    if s_lo == s_hi {
        return Err(Error::NonMonotoneEndpoints {
            status: s_lo.as_str(),
        });
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if classify(mid)? == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdEstimate {
        c: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        evaluations,
    })
}

/// `L(x) = ln f(e^x)` and `ρ(x) = t f'(t)/f(t)` at `t = e^x`.
#[derive(Clone, Copy)]
pub(crate) struct LogWarp<'a> {
    metric: &'a WarpedMetric,
}

impl<'a> LogWarp<'a> {
    pub(crate) fn new(metric: &'a WarpedMetric) -> Self {
        Self { metric }
    }
    pub(crate) fn l(&self, x: f64) -> f64 {
        self.metric.ln_f(math::exp(x))
    }
    pub(crate) fn rho(&self, x: f64) -> f64 {
        let t = math::exp(x);
        t * self.metric.log_derivative(t)
    }
}

/// Least-squares fit of `ρ(t) = q + m / ln t` on `[t_lo, t_hi]`.
pub(crate) fn fit_warp_rate(lw: &LogWarp<'_>, t_lo: f64, t_hi: f64) -> Rate {
    const SAMPLES: usize = 64;
    let (x_lo, x_hi) = (math::log(t_lo), math::log(t_hi));
    let (mut s1, mut sz, mut szz, mut sy, mut szy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..SAMPLES {
        let x = x_lo + (x_hi - x_lo) * i as f64 / (SAMPLES - 1) as f64;
        let z = 1.0 / x;
        let y = lw.rho(x);
        s1 += 1.0;
        sz += z;
        szz += z * z;
        sy += y;
        szy += z * y;
    }
    let det = s1 * szz - sz * sz;
    let m = (s1 * szy - sz * sy) / det;
    let q = (sy - m * sz) / s1;
    if snap(q) == 1.0 {
        // The two basis functions are nearly collinear over one decade; with
        // q pinned the slope is far better conditioned.
        return Rate {
            q,
            m: (szy - sz) / szz,
        };
    }
    Rate { q, m }
}

fn snap(v: f64) -> f64 {
    if math::abs(v - 1.0) < SNAP {
        1.0
    } else {
        v
    }
}

fn converges(rate: Rate) -> bool {
    rate.q > 1.0 || (rate.q == 1.0 && rate.m > 1.0)
}

/// Tail model for the nested integrand given a (snapped) warp rate.
#[derive(Debug, Clone, Copy)]
struct NestedModel {
    warp: Rate,
    /// `λ`, `μ` of the inner tail `U`.
    lambda: f64,
    mu: f64,
    integrand: Rate,
    /// False when the inner integral itself diverges.
    inner_finite: bool,
}

impl NestedModel {
    fn new(alpha: f64, fitted: Rate) -> Self {
        let warp = Rate {
            q: snap(fitted.q),
            m: fitted.m,
        };
        let lambda = -(alpha * warp.q + 1.0);
        let lambda = if math::abs(lambda) < SNAP * math::abs(alpha) {
            0.0
        } else {
            lambda
        };
        let mu = snap(-alpha * warp.m);
        let (integrand, inner_finite) = if lambda > 0.0 {
            (
                Rate {
                    q: snap(2.0 * warp.q - 1.0),
                    m: snap(2.0 * warp.m),
                },
                true,
            )
        } else if lambda == 0.0 {
            (
                Rate {
                    q: 1.0,
                    m: snap(2.0 * warp.m - 1.0),
                },
                mu > 1.0,
            )
        } else {
            (
                Rate {
                    q: 2.0 * warp.q - 1.0,
                    m: 2.0 * warp.m,
                },
                false,
            )
        };
        Self {
            warp,
            lambda,
            mu,
            integrand,
            inner_finite,
        }
    }

    fn convergent(&self) -> bool {
        self.inner_finite && converges(self.integrand)
    }

    /// `e^{-x} e^{-αL(x)} ∫_{e^x}^∞ f^α` under the model, i.e. `U(λ, μ, x)`.
    fn inner_tail(&self, x: f64) -> f64 {
        quad::upper_tail(self.lambda, self.mu, x).unwrap_or(f64::INFINITY)
    }

    /// `C = ∫_H^∞ f^β(s) ∫_s^∞ f^α`, for `L(X) = l_x`.
    fn outer_tail(&self, big_x: f64, l_x: f64) -> f64 {
        let q = self.warp.q;
        let m = self.warp.m;
        let log_integrand = |z: f64| -2.0 * (q - 1.0) * big_x * math::expm1(z) - 2.0 * m * z + z;
        let integrand = |z: f64| math::exp(log_integrand(z)) * self.inner_tail(big_x * math::exp(z));
        // Far enough out that U has reached its asymptotic regime.
        let z_end = math::log(1e12 / big_x).max(1.0);
        let mut total = 0.0;
        let mut lo = 0.0;
        let mut width = 0.02;
        while lo < z_end {
            let hi = (lo + width).min(z_end);
            let part = quad::gauss16(&integrand, lo, hi);
            total += part;
            lo = hi;
            if part <= 1e-18 * total && log_integrand(lo) < math::log(total) - 40.0 {
                break;
            }
            width = (width * 1.15).min(0.5);
        }
        if q == 1.0 && lo >= z_end {
            // Pure exponential remainder: U is constant (λ > 0) or linear (λ = 0) in x.
            let rate = self.integrand.m - 1.0;
            total += integrand(lo) / rate;
        }
        math::exp(-2.0 * l_x + 2.0 * big_x) * big_x * total
    }
}

/// Scaled nested/swapped sweeps over `[0, X]` in `x = ln t`.
#[derive(Debug, Clone)]
pub(crate) struct NestedTable {
    pub(crate) alpha: f64,
    pub(crate) beta: f64,
    pub(crate) xs: Vec<f64>,
    pub(crate) ls: Vec<f64>,
    /// `F̃` at panel edges.
    pub(crate) ftil: Vec<f64>,
    /// Per-panel outer integral, swapped route.
    pub(crate) swapped_parts: Vec<f64>,
    /// Per-panel outer integral, nested route (empty when the inner integral diverges).
    nested_parts: Vec<f64>,
    /// `B = F(H)·I(H)` and `C`; zero when truncated.
    pub(crate) b_term: f64,
    pub(crate) c_term: f64,
    verdict: ConvergenceVerdict,
}

fn panel_width(lw: &LogWarp<'_>, x: f64, scale: f64) -> f64 {
    let rho = lw.rho(x).max(1e-3);
    (0.5 / (rho * scale)).min(0.05)
}

impl NestedTable {
    pub(crate) fn build(metric: &WarpedMetric, alpha: f64, beta: f64, opts: CriteriaOptions) -> Result<Self> {
        let lw = LogWarp::new(metric);
        let h_eff = opts.horizon.min(metric.r_max());
        let big_x_req = math::log(h_eff);
        let scale = math::abs(alpha).max(math::abs(beta)).max(2.0);

        // Panel edges; stop early once the outer integrand is negligible.
        let mut xs = Vec::new();
        let mut ls = Vec::new();
        xs.push(0.0);
        ls.push(lw.l(0.0));
        let mut truncated = false;
        let mut x = 0.0;
        while x < big_x_req {
            let next = (x + panel_width(&lw, x, scale)).min(big_x_req);
            let l = lw.l(next);
            xs.push(next);
            ls.push(l);
            x = next;
            if -2.0 * l + x < NEGLIGIBLE_LOG {
                truncated = true;
                break;
            }
        }
        let n_edges = xs.len();
        let big_x = xs[n_edges - 1];
        let horizon = math::exp(big_x);
        if !truncated && h_eff < MIN_HORIZON {
            return Err(Error::HorizonTooSmall { horizon: h_eff });
        }

        // Swapped sweep.
        let mut ftil = Vec::with_capacity(n_edges);
        ftil.push(0.0);
        let mut swapped_parts = Vec::with_capacity(n_edges - 1);
        for i in 0..n_edges - 1 {
            let (a, b) = (xs[i], xs[i + 1]);
            let (la, lb) = (ls[i], ls[i + 1]);
            let mut outer = 0.0;
            for &(y, w) in gauss_nodes(a, b).iter() {
                let ly = lw.l(y);
                let f_y = math::exp(-beta * (ly - la)) * ftil[i]
                    + quad::gauss16(|s| math::exp(beta * (lw.l(s) - ly) + s), a, y);
                outer += w * math::exp(-2.0 * ly + y) * f_y;
            }
            swapped_parts.push(outer);
            let next = math::exp(-beta * (lb - la)) * ftil[i]
                + quad::gauss16(|s| math::exp(beta * (lw.l(s) - lb) + s), a, b);
            ftil.push(next);
        }
        let partial: f64 = swapped_parts.iter().sum();

        // Tail model from two windows.
        let (fit1, fit2) = if truncated {
            let r = Rate {
                q: lw.rho(big_x),
                m: 0.0,
            };
            (r, r)
        } else {
            (
                fit_warp_rate(&lw, h_eff / 10.0, h_eff),
                fit_warp_rate(&lw, h_eff / 20.0, h_eff / 2.0),
            )
        };
        let model1 = NestedModel::new(alpha, fit1);
        let model2 = NestedModel::new(alpha, fit2);
        let agree = model1.convergent() == model2.convergent();

        let l_x = ls[n_edges - 1];
        let mut b_term = 0.0;
        let mut c_term = 0.0;
        let mut nested_parts = Vec::new();
        let mut tail_bound = 0.0;
        let mut status = if !agree {
            Status::Inconclusive
        } else if truncated || model1.convergent() {
            Status::Convergent
        } else {
            Status::Divergent
        };

        if status == Status::Convergent {
            // Starting value of the downward sweep.
            let itil_end = if truncated {
                let lam = -alpha * fit1.q - 1.0;
                if lam > 0.0 {
                    math::exp(big_x) / lam
                } else {
                    0.0
                }
            } else {
                math::exp(big_x) * model1.inner_tail(big_x)
            };
            if !truncated {
                let tails = |m: &NestedModel| {
                    let b = ftil[n_edges - 1] * math::exp(-2.0 * l_x + big_x) * m.inner_tail(big_x);
                    (b, m.outer_tail(big_x, l_x))
                };
                let (b1, c1) = tails(&model1);
                let (b2, c2) = tails(&model2);
                b_term = b1;
                c_term = c1;
                tail_bound = math::abs((b1 + c1) - (b2 + c2));
            }
            nested_parts = vec_zeroed(n_edges - 1);
            let mut itil_hi = itil_end;
            for i in (0..n_edges - 1).rev() {
                let (a, b) = (xs[i], xs[i + 1]);
                let lb = ls[i + 1];
                let mut outer = 0.0;
                for &(y, w) in gauss_nodes(a, b).iter() {
                    let ly = lw.l(y);
                    let i_y = math::exp(alpha * (lb - ly)) * itil_hi
                        + quad::gauss16(|s| math::exp(alpha * (lw.l(s) - ly) + s), y, b);
                    outer += w * math::exp(-2.0 * ly + y) * i_y;
                }
                nested_parts[i] = outer;
                let la = ls[i];
                itil_hi = math::exp(alpha * (lb - la)) * itil_hi
                    + quad::gauss16(|s| math::exp(alpha * (lw.l(s) - la) + s), a, b);
            }
            let value = partial + b_term + c_term;
            if !value.is_finite() || tail_bound > opts.tail_rtol * math::abs(value) {
                status = Status::Inconclusive;
            }
        }

        let verdict = ConvergenceVerdict {
            status,
            value: None,
            partial,
            tail_bound,
            tail_rate: model1.integrand,
            warp_rate: model1.warp,
            horizon,
            truncated,
        };
        Ok(Self {
            alpha,
            beta,
            xs,
            ls,
            ftil,
            swapped_parts,
            nested_parts,
            b_term,
            c_term,
            verdict,
        })
    }

    pub(crate) fn status(&self) -> Status {
        self.verdict.status
    }

    pub(crate) fn horizon(&self) -> f64 {
        self.verdict.horizon
    }

    pub(crate) fn truncated(&self) -> bool {
        self.verdict.truncated
    }

    pub(crate) fn verdict(&self, form: Form) -> ConvergenceVerdict {
        let mut v = self.verdict.clone();
        if v.status == Status::Convergent {
            v.value = Some(match form {
                Form::Swapped => v.partial + self.b_term + self.c_term,
                Form::Nested => self.nested_parts.iter().sum::<f64>() + self.c_term,
            });
        }
        v
    }
}

fn vec_zeroed(n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n);
    v.resize(n, 0.0);
    v
}

/// `∫₁^∞ (t / V(t))^{1/(p-1)} dt` with `V` the geodesic-ball volume.
fn volume_integral(metric: &WarpedMetric, p: f64, opts: CriteriaOptions) -> Result<ConvergenceVerdict> {
    let lw = LogWarp::new(metric);
    let nm1 = (metric.n() - 1) as f64;
    let inv = 1.0 / (p - 1.0);
    let ln_omega = math::log(metric.sphere_area());
    let h_eff = opts.horizon.min(metric.r_max());
    let big_x_req = math::log(h_eff);
    let scale = nm1.max(nm1 * inv).max(2.0);

    let (v0, _) = quad::integrate(|t| math::pow(metric.eval(t).f, nm1), 0.0, 1.0, 1e-12, 0.0)?;
    let l0 = lw.l(0.0);
    // Ṽ = e^{-(n-1)L} ∫₀^t f^{n-1}.
    let mut vtil = v0 * math::exp(-nm1 * l0);
    let log_integrand = |x: f64, ly: f64, vt: f64| inv * (x - ln_omega - math::log(vt) - nm1 * ly) + x;

    let mut partial = 0.0;
    let mut x = 0.0;
    let mut lx = l0;
    let mut truncated = false;
    while x < big_x_req {
        let b = (x + panel_width(&lw, x, scale)).min(big_x_req);
        for &(y, w) in gauss_nodes(x, b).iter() {
            let ly = lw.l(y);
            let vt = math::exp(-nm1 * (ly - lx)) * vtil
                + quad::gauss16(|s| math::exp(nm1 * (lw.l(s) - ly) + s), x, y);
            partial += w * math::exp(log_integrand(y, ly, vt));
        }
        let lb = lw.l(b);
        vtil =
            math::exp(-nm1 * (lb - lx)) * vtil + quad::gauss16(|s| math::exp(nm1 * (lw.l(s) - lb) + s), x, b);
        x = b;
        lx = lb;
        if log_integrand(x, lx, vtil) < NEGLIGIBLE_LOG {
            truncated = true;
            break;
        }
    }
    let horizon = math::exp(x);
    if !truncated && h_eff < MIN_HORIZON {
        return Err(Error::HorizonTooSmall { horizon: h_eff });
    }

    let rate_of = |fit: Rate| Rate {
        q: snap(nm1 * snap(fit.q) * inv),
        m: snap(nm1 * fit.m * inv),
    };
    let (fit1, fit2) = if truncated {
        let r = Rate { q: lw.rho(x), m: 0.0 };
        (r, r)
    } else {
        (
            fit_warp_rate(&lw, h_eff / 10.0, h_eff),
            fit_warp_rate(&lw, h_eff / 20.0, h_eff / 2.0),
        )
    };
    let (r1, r2) = (rate_of(fit1), rate_of(fit2));
    let edge = math::exp(log_integrand(x, lx, vtil));
    let tail = |r: Rate| quad::upper_tail(r.q - 1.0, r.m, x).map(|u| edge * u);

    let mut status = if converges(r1) != converges(r2) {
        Status::Inconclusive
    } else if truncated || converges(r1) {
        Status::Convergent
    } else {
        Status::Divergent
    };
    let mut value = None;
    let mut tail_bound = 0.0;
    if status == Status::Convergent {
        let (t1, t2) = if truncated {
            (Some(0.0), Some(0.0))
        } else {
            (tail(r1), tail(r2))
        };
        match (t1, t2) {
            (Some(t1), Some(t2)) => {
                let v = partial + t1;
                tail_bound = math::abs(t1 - t2);
                if tail_bound > opts.tail_rtol * v {
                    status = Status::Inconclusive;
                } else {
                    value = Some(v);
                }
            }
            _ => status = Status::Inconclusive,
        }
    }
    Ok(ConvergenceVerdict {
        status,
        value,
        partial,
        tail_bound,
        tail_rate: r1,
        warp_rate: Rate {
            q: snap(fit1.q),
            m: fit1.m,
        },
        horizon,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{CurvatureProfile, TailLaw};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const H: f64 = 1e6;

    #[test]
    fn exponents_examples() {
        let e = p_exponents(4, 3.0).unwrap();
        assert_eq!((e.alpha, e.beta), (-1.5, -0.5));
        let e = p_exponents(3, 2.5).unwrap();
        assert_relative_eq!(e.alpha, -4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(e.beta, -2.0 / 3.0, max_relative = 1e-15);
        assert!(p_exponents(3, 2.0).is_err());
        assert!(p_exponents(3, 3.0).is_err());
    }

    proptest! {
        #[test]
        fn exponents_sum_to_minus_two(n in 3u32..40, s in 0.0f64..1.0) {
            let p = 2.0 + (n as f64 - 2.0) * (0.001 + 0.998 * s);
            let e = p_exponents(n, p).unwrap();
            prop_assert_eq!(e.alpha + e.beta, -2.0);
            let beta_formula = (n as f64 - 2.0 * p + 1.0) / (p - 1.0);
            prop_assert!((e.beta - beta_formula).abs() <= 1e-14 * (1.0 + beta_formula.abs()));
        }
    }

    #[test]
    fn euclidean_j_diverges() {
        let m = WarpedMetric::euclidean(3).unwrap();
        let v = j_integral(&m, Form::Nested, H).unwrap();
        assert_eq!(v.status, Status::Divergent);
        assert!(v.value.is_none());
        // Swapped partial: ∫₁^H (t-1)/t² dt.
        assert_relative_eq!(v.partial, math::log(H) - 1.0 + 1.0 / H, max_relative = 1e-10);
    }

    #[test]
    fn hyperbolic_j_value() {
        let m = WarpedMetric::hyperbolic(1.0, 3).unwrap();
        // ∫₁^∞ (coth s - 1) ds = -ln(1 - e^{-2}) , i.e. 1 - ln 2 - ln sinh 1.
        let oracle = 1.0 - math::LN_2 - math::log(math::sinh(1.0));
        assert_relative_eq!(oracle, 0.145_413_5, max_relative = 1e-6);
        for form in [Form::Nested, Form::Swapped] {
            let v = j_integral(&m, form, H).unwrap();
            assert_eq!(v.status, Status::Convergent);
            assert!(v.truncated);
            assert_relative_eq!(v.value.unwrap(), oracle, max_relative = 1e-9);
        }
    }

    #[test]
    fn march_j_verdicts() {
        let conv = j_integral(&WarpedMetric::march(0.6, 3).unwrap(), Form::Nested, H).unwrap();
        assert_eq!(conv.status, Status::Convergent);
        assert!(conv.value.unwrap().is_finite());
        let div = j_integral(&WarpedMetric::march(0.4, 3).unwrap(), Form::Nested, H).unwrap();
        assert_eq!(div.status, Status::Divergent);
    }

    #[test]
    fn fubini_on_march() {
        let m = WarpedMetric::march(0.75, 3).unwrap();
        let a = j_integral(&m, Form::Nested, H).unwrap().value.unwrap();
        let b = j_integral(&m, Form::Swapped, H).unwrap().value.unwrap();
        assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{a} {b}");
    }

    #[test]
    fn p_integral_verdicts() {
        let e = WarpedMetric::euclidean(4).unwrap();
        let v = p_integral(&e, 3.0, H).unwrap();
        assert_eq!(v.status, Status::Divergent);
        // Swapped partial: ∫₁^H t^{-3/2}·2(√t - 1) dt.
        let oracle = 2.0 * math::log(H) - 4.0 * (1.0 - 1.0 / math::sqrt(H));
        assert_relative_eq!(v.partial, oracle, max_relative = 1e-10);
        let h = WarpedMetric::hyperbolic(1.0, 4).unwrap();
        assert_eq!(p_integral(&h, 3.0, H).unwrap().status, Status::Convergent);
        let c6 = WarpedMetric::march(0.6, 4).unwrap();
        assert_eq!(p_integral(&c6, 3.0, H).unwrap().status, Status::Convergent);
        let c4 = WarpedMetric::march(0.4, 4).unwrap();
        assert_eq!(p_integral(&c4, 3.0, H).unwrap().status, Status::Divergent);
    }

    #[test]
    fn hyperbolic_p_integral_matches_quadrature() {
        // Direct nested quadrature on the closed form.
        let h = WarpedMetric::hyperbolic(1.0, 4).unwrap();
        let e = p_exponents(4, 3.0).unwrap();
        let f = |t: f64| math::sinh(t);
        let inner = |s: f64| {
            quad::integrate(|t| math::pow(f(t), e.alpha), s, s + 60.0, 1e-13, 0.0)
                .unwrap()
                .0
        };
        let (oracle, _) =
            quad::integrate(|s| math::pow(f(s), e.beta) * inner(s), 1.0, 60.0, 1e-11, 0.0).unwrap();
        let v = p_integral(&h, 3.0, H).unwrap();
        assert_relative_eq!(v.value.unwrap(), oracle, max_relative = 1e-8);
    }

    #[test]
    fn parabolicity_examples() {
        let e = WarpedMetric::euclidean(3).unwrap();
        let r = parabolicity_check(&e, 3.0, H).unwrap();
        assert_eq!(r.conclusion, Parabolicity::Parabolic);
        let r = parabolicity_check(&e, 2.0, H).unwrap();
        assert_eq!(r.verdict.status, Status::Convergent);
        assert_eq!(r.conclusion, Parabolicity::Inconclusive);
        // (t / (4π t³/3))^{1} integrated from 1: 3/(4π).
        assert_relative_eq!(
            r.verdict.value.unwrap(),
            3.0 / (4.0 * math::PI),
            max_relative = 1e-6
        );
    }

    #[test]
    fn parabolicity_power_log_tail() {
        let p = CurvatureProfile::new(TailLaw::PowerLog { c: 1.0 }, 3.0).unwrap();
        let m = WarpedMetric::from_curvature(p, 3, 2e6).unwrap();
        assert_eq!(
            parabolicity_check(&m, 3.0, H).unwrap().conclusion,
            Parabolicity::Parabolic
        );
        assert_eq!(
            parabolicity_check(&m, 4.0, H).unwrap().conclusion,
            Parabolicity::Parabolic
        );
    }

    #[test]
    fn small_horizon_rejected() {
        let m = WarpedMetric::march(0.6, 3).unwrap();
        assert!(matches!(
            j_integral(&m, Form::Nested, 50.0),
            Err(Error::HorizonTooSmall { .. })
        ));
    }

    #[test]
    fn verdict_stable_under_horizon_doubling() {
        for c in [0.4, 0.6, 0.75] {
            let m = WarpedMetric::march(c, 3).unwrap();
            let a = j_integral(&m, Form::Swapped, 5e5).unwrap().status;
            let b = j_integral(&m, Form::Swapped, 1e6).unwrap().status;
            assert_eq!(a, b, "c = {c}");
        }
    }

    #[test]
    fn threshold_scan_n3() {
        let est = threshold_scan(|c| WarpedMetric::march(c, 3), Criterion::J, (0.2, 1.0), 0.1, H).unwrap();
        assert!(est.c >= 0.4 && est.c <= 0.6, "{est:?}");
    }

    #[test]
    fn threshold_scan_rejects_same_endpoints() {
        let r = threshold_scan(|c| WarpedMetric::march(c, 3), Criterion::J, (0.7, 1.0), 0.1, H);
        assert!(matches!(r, Err(Error::NonMonotoneEndpoints { .. })));
    }
}
