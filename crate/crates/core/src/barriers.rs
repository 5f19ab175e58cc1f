//! Radial barriers `±η + B`, their supersolution residuals, and the explicit
//! local/uniform gradient bounds for positive minimal graphs.
//!
//! `η(r) = k ∫_r^∞ f^α(t) ∫_1^t f^β(s) ds dt` with `(α, β) = (1-n, n-3)` for the
//! minimal graph equation and the p-Laplace exponents otherwise. `η` reuses the
//! swapped sweep of the criteria table, so its tail beyond the horizon is the
//! same extrapolation that decided convergence.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::boundary::BoundaryData;
use crate::criteria::{p_exponents, CriteriaOptions, LogWarp, NestedTable, Status};
use crate::manifold::WarpedMetric;
use crate::math;
use crate::quad::{self, gauss_nodes};
use crate::{Equation, Error, Result};

/// `(η, η', η'')` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaValues {
    pub eta: f64,
    pub eta_r: f64,
    pub eta_rr: f64,
}

#[derive(Debug)]
struct Sweep {
    table: NestedTable,
    /// `suffix[i] = Σ_{j ≥ i}` swapped panel integrals, plus the model tail.
    suffix: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BarrierProfile {
    equation: Equation,
    k: f64,
    metric: WarpedMetric,
    sweep: Arc<Sweep>,
}

fn exponents(metric: &WarpedMetric, equation: Equation) -> Result<(f64, f64)> {
    let n = metric.n() as f64;
    match equation {
        Equation::Minimal => Ok((1.0 - n, n - 3.0)),
        Equation::PLaplace { p } => {
            let e = p_exponents(metric.n(), p)?;
            Ok((e.alpha, e.beta))
        }
        Equation::Harmonic => Err(Error::InvalidArgument(
            "barriers are defined for the minimal and p-Laplace equations",
        )),
    }
}

/// Build `η` for `equation` with scale `k`.
pub fn barrier_profile(metric: &WarpedMetric, equation: Equation, k: f64) -> Result<BarrierProfile> {
    barrier_profile_with(metric, equation, k, CriteriaOptions::default())
}

pub fn barrier_profile_with(
    metric: &WarpedMetric,
    equation: Equation,
    k: f64,
    opts: CriteriaOptions,
) -> Result<BarrierProfile> {
    if !(k > 0.0) {
        return Err(Error::OutOfRange { what: "k", value: k });
    }
    let (alpha, beta) = exponents(metric, equation)?;
    let table = NestedTable::build(metric, alpha, beta, opts)?;
    match table.status() {
        Status::Convergent => {}
        Status::Divergent => return Err(Error::CriterionDivergent),
        Status::Inconclusive => return Err(Error::CriterionInconclusive),
    }
    let panels = table.swapped_parts.len();
    let mut suffix = Vec::with_capacity(panels + 1);
    suffix.resize(panels + 1, 0.0);
    suffix[panels] = table.b_term + table.c_term;
    for i in (0..panels).rev() {
        suffix[i] = suffix[i + 1] + table.swapped_parts[i];
    }
    Ok(BarrierProfile {
        equation,
        k,
        metric: metric.clone(),
        sweep: Arc::new(Sweep { table, suffix }),
    })
}

impl BarrierProfile {
    pub fn equation(&self) -> Equation {
        self.equation
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn metric(&self) -> &WarpedMetric {
        &self.metric
    }

    /// Same profile with a different scale; the integral table is shared.
    pub fn with_k(&self, k: f64) -> Self {
        Self { k, ..self.clone() }
    }

    /// End of the tabulated region.
    pub fn horizon(&self) -> f64 {
        self.sweep.table.horizon()
    }

    /// `η(horizon)`, i.e. the extrapolated tail. Diagnostic only.
    pub fn tail_value(&self) -> f64 {
        self.k * *self.sweep.suffix.last().unwrap()
    }

    fn ftil_in_panel(&self, lw: &LogWarp<'_>, i: usize, y: f64, ly: f64) -> f64 {
        let t = &self.sweep.table;
        let (a, la) = (t.xs[i], t.ls[i]);
        let beta = t.beta;
        math::exp(-beta * (ly - la)) * t.ftil[i]
            + quad::gauss16(|s| math::exp(beta * (lw.l(s) - ly) + s), a, y)
    }

    /// `(η, η', η'')` for `r ≥ 1`.
    pub fn values(&self, r: f64) -> Result<EtaValues> {
        let t = &self.sweep.table;
        let horizon = self.horizon();
        if !(r >= 1.0) || (r > horizon * (1.0 + 1e-12) && !t.truncated()) {
            return Err(Error::Domain { r, r_max: horizon });
        }
        if r > horizon {
            // Truncated table: the integrand is below e^-700 here.
            return Ok(EtaValues {
                eta: 0.0,
                eta_r: 0.0,
                eta_rr: 0.0,
            });
        }
        let lw = LogWarp::new(&self.metric);
        let x = math::log(r).min(t.xs[t.xs.len() - 1]);
        let last = t.xs.len() - 2;
        let i = t.xs.partition_point(|&e| e <= x).saturating_sub(1).min(last);
        let b = t.xs[i + 1];
        let lx = lw.l(x);
        let ftil = self.ftil_in_panel(&lw, i, x, lx);
        let mut within = 0.0;
        for &(y, w) in gauss_nodes(x, b).iter() {
            let ly = lw.l(y);
            within += w * math::exp(-2.0 * ly + y) * self.ftil_in_panel(&lw, i, y, ly);
        }
        let scale = math::exp(-2.0 * lx);
        let log_der = self.metric.log_derivative(r);
        Ok(EtaValues {
            eta: self.k * (within + self.sweep.suffix[i + 1]),
            eta_r: -self.k * scale * ftil,
            eta_rr: -self.k * scale * (t.alpha * log_der * ftil + 1.0),
        })
    }

    pub fn eta(&self, r: f64) -> Result<f64> {
        Ok(self.values(r)?.eta)
    }

    pub fn eta_r(&self, r: f64) -> Result<f64> {
        Ok(self.values(r)?.eta_r)
    }

    /// `Δη = η'' + (n-1)(f'/f) η'`, evaluated with the cancellation done analytically.
    fn laplacian(&self, r: f64, v: &EtaValues) -> f64 {
        let n = self.metric.n() as f64;
        if v.eta_r == 0.0 && v.eta_rr == 0.0 {
            return 0.0;
        }
        let t = &self.sweep.table;
        let log_der = self.metric.log_derivative(r);
        // η' = -k e^{-2L} F̃, so F̃ is recovered from η' directly.
        let scale = math::exp(-2.0 * self.metric.ln_f(r));
        let ftil = -v.eta_r / (self.k * scale);
        -self.k * scale * ((t.alpha + n - 1.0) * log_der * ftil + 1.0)
    }
}

/// Sign-determining part of the operator applied to `η + B` at `(r, θ)`:
/// `W² Δu - Hess u(∇u, ∇u)` for the minimal graph equation and
/// `Δ_p u / |∇u|^{p-4}` for the p-Laplacian.
pub fn residual_at(profile: &BarrierProfile, b: &BoundaryData, r: f64, theta: f64) -> Result<f64> {
    let v = profile.values(r)?;
    let w = profile.metric.eval(r);
    let (f, fr) = (w.f, w.df);
    let f2 = f * f;
    let g = b.derivative(theta) * b.derivative(theta);
    let lap_b = b.laplacian(theta);
    let hb = b.hess_grad_grad(theta);

    let grad2 = v.eta_r * v.eta_r + g / f2;
    let lap_u = profile.laplacian(r, &v) + lap_b / f2;
    let hess_u = v.eta_r * v.eta_r * v.eta_rr - v.eta_r * fr * g / (f2 * f) + hb / (f2 * f2);
    match profile.equation {
        Equation::Minimal => Ok((1.0 + grad2) * lap_u - hess_u),
        Equation::PLaplace { p } => {
            if grad2 == 0.0 {
                return Err(Error::DegenerateGradient { r, theta });
            }
            Ok(grad2 * lap_u + (p - 2.0) * hess_u)
        }
        Equation::Harmonic => unreachable!("rejected at construction"),
    }
}

/// Residual at every `(r, θ)` sample.
pub fn supersolution_residual(
    profile: &BarrierProfile,
    b: &BoundaryData,
    samples: &[(f64, f64)],
) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|&(r, th)| residual_at(profile, b, r, th))
        .collect()
}

/// Hessian bound below which `η + B` is a p-supersolution for every `r > 1`.
pub fn p_hessian_bound(n: u32, p: f64) -> f64 {
    let n = n as f64;
    ((p - 1.0) / (n - 1.0)).min(1.0 / (n + p - 3.0))
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierSearch {
    /// Radial sample is geometric on `(1, r_max]`.
    pub r_max: f64,
    pub nr: usize,
    /// Angular sample is uniform on `[0, π]`, poles included.
    pub n_theta: usize,
    pub max_doublings: u32,
    pub criteria: CriteriaOptions,
}

impl Default for BarrierSearch {
    fn default() -> Self {
        Self {
            r_max: 1e3,
            nr: 200,
            n_theta: 64,
            max_doublings: 40,
            criteria: CriteriaOptions::default(),
        }
    }
}

impl BarrierSearch {
    pub fn radii(&self, horizon: f64) -> Vec<f64> {
        let top = self.r_max.min(horizon);
        (1..=self.nr)
            .map(|j| math::pow(top, j as f64 / self.nr as f64))
            .collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_theta)
            .map(|j| math::PI * j as f64 / (self.n_theta - 1) as f64)
            .collect()
    }
}

/// Admissible `(k, r0)` with clamp levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub equation: Equation,
    pub k: f64,
    pub r0: f64,
    /// `a = min_{∂B(o,r0)} (η + B)`.
    pub a: f64,
    /// `d = max_{∂B(o,r0)} (-η + B)`.
    pub d: f64,
    pub eta_r0: f64,
    /// Largest residual over the checked grid on `[r0, r_max]`.
    pub max_residual: f64,
    pub checked_r_max: f64,
    pub doublings: u32,
    /// `η` at the table horizon (not small for slowly growing warps).
    pub eta_horizon: f64,
    pub horizon: f64,
}

/// Profile, certificate and data together; evaluates the clamped barriers.
#[derive(Debug, Clone)]
pub struct Barriers {
    pub profile: BarrierProfile,
    pub certificate: Certificate,
    pub b: BoundaryData,
}

impl Barriers {
    /// `w = min(η + B, a)` for `r ≥ r0`, `a` inside.
    pub fn upper(&self, r: f64, theta: f64) -> Result<f64> {
        let c = &self.certificate;
        if r < c.r0 {
            return Ok(c.a);
        }
        Ok((self.profile.eta(r)? + self.b.value(theta)).min(c.a))
    }

    /// `v = max(-η + B, d)` for `r ≥ r0`, `d` inside.
    pub fn lower(&self, r: f64, theta: f64) -> Result<f64> {
        let c = &self.certificate;
        if r < c.r0 {
            return Ok(c.d);
        }
        Ok((-self.profile.eta(r)? + self.b.value(theta)).max(c.d))
    }
}

/// Doubling search for `k` from `max(1, ‖b‖_{C²})` and the smallest grid
/// radius `r0 > 1` beyond which the residual is nonpositive and
/// `η(r0) > 2 sup|b|`.
pub fn choose_k_and_r0(
    metric: &WarpedMetric,
    equation: Equation,
    b: &BoundaryData,
    search: BarrierSearch,
) -> Result<Barriers> {
    let norms = b.norms();
    if let Equation::PLaplace { p } = equation {
        let bound = p_hessian_bound(metric.n(), p);
        if norms.sup_hess >= bound {
            return Err(Error::HessianTooLarge {
                sup_hess: norms.sup_hess,
                bound,
                required_scale: bound / norms.sup_hess,
            });
        }
    }
    if search.nr < 2 || search.n_theta < 2 {
        return Err(Error::InvalidArgument("barrier search grid too small"));
    }
    let base = barrier_profile_with(metric, equation, 1.0, search.criteria)?;
    let radii = search.radii(base.horizon());
    let angles = search.angles();
    let k0 = norms.c2().max(1.0);

    for doublings in 0..=search.max_doublings {
        let k = k0 * math::pow(2.0, doublings as f64);
        let profile = base.with_k(k);
        // Worst residual per radius, then the longest admissible suffix.
        let mut row_max = Vec::with_capacity(radii.len());
        for &r in &radii {
            let mut worst = f64::NEG_INFINITY;
            for &th in &angles {
                worst = worst.max(residual_at(&profile, b, r, th)?);
            }
            row_max.push(worst);
        }
        let mut start = radii.len();
        while start > 0 && row_max[start - 1] <= 0.0 {
            start -= 1;
        }
        if start == radii.len() {
            continue;
        }
        let r0 = radii[start];
        let eta_r0 = profile.eta(r0)?;
        if eta_r0 <= 2.0 * norms.sup_abs {
            continue;
        }
        let max_residual = row_max[start..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let certificate = Certificate {
            equation,
            k,
            r0,
            a: eta_r0 + norms.min,
            d: -eta_r0 + norms.max,
            eta_r0,
            max_residual,
            checked_r_max: radii[radii.len() - 1],
            doublings,
            eta_horizon: profile.tail_value(),
            horizon: profile.horizon(),
        };
        return Ok(Barriers {
            profile,
            certificate,
            b: b.clone(),
        });
    }
    Err(Error::SearchExhausted {
        doublings: search.max_doublings,
    })
}

/// `ψ(R) = (n-1) K0 R coth(K0 R) + 1`, equal to `n` when `K0 = 0`.
pub fn psi(r: f64, k0: f64, n: u32) -> f64 {
    (n as f64 - 1.0) * math::x_coth_x(k0 * r) + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientBoundInputs {
    /// Value of the positive solution at the centre.
    pub u_p: f64,
    pub radius: f64,
    pub k0: f64,
    pub n: u32,
}

/// A bound that may have overflowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientBound {
    pub value: f64,
    pub overflow: bool,
}

fn assemble_bound(prefactor: f64, exponent: f64) -> GradientBound {
    let e = math::exp(exponent);
    let value = prefactor * (e + 1.0);
    GradientBound {
        value: if value.is_finite() { value } else { f64::INFINITY },
        overflow: !value.is_finite(),
    }
}

/// `(2/√3 + 32u/R)(exp[64u²(2ψ/R² + √(4ψ²/R⁴ + (n-1)K0²/(64u²)))] + 1)`.
pub fn gradient_bound(inputs: GradientBoundInputs) -> Result<GradientBound> {
    let GradientBoundInputs {
        u_p: u,
        radius,
        k0,
        n,
    } = inputs;
    if !(u > 0.0) || !(radius > 0.0) || !(k0 >= 0.0) || n < 2 {
        return Err(Error::InvalidArgument(
            "gradient bound needs u_p > 0, R > 0, K0 >= 0, n >= 2",
        ));
    }
    let ps = psi(radius, k0, n);
    let r2 = radius * radius;
    let u2 = u * u;
    // 64u²·√(a + b/(64u²)) written as √(4096u⁴a + 64u²b) so u → 0 is harmless.
    let a = 4.0 * ps * ps / (r2 * r2);
    let b = (n as f64 - 1.0) * k0 * k0;
    let exponent = 128.0 * u2 * ps / r2 + math::sqrt(4096.0 * u2 * u2 * a + 64.0 * u2 * b);
    Ok(assemble_bound(
        2.0 / math::sqrt(3.0) + 32.0 * u / radius,
        exponent,
    ))
}

/// R-free constants: `u/R ≤ 2c`, `ψ ≤ (n-1) c coth c + 1`, `u² K0² ≤ 4c³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformConstants {
    pub u_over_r: f64,
    pub psi: f64,
    pub u_k0_sq: f64,
}

pub fn uniform_gradient_constants(c: f64, n: u32) -> Result<UniformConstants> {
    if !(c > 0.0) {
        return Err(Error::OutOfRange { what: "c", value: c });
    }
    Ok(UniformConstants {
        u_over_r: 2.0 * c,
        psi: psi(1.0, c, n),
        u_k0_sq: 4.0 * c * c * c,
    })
}

/// The gradient bound with every R-dependent quantity replaced by its uniform
/// bound: `(2/√3 + 32ρ)(exp[128ρ²ψ + √(16384ρ⁴ψ² + 64(n-1)Q)] + 1)`.
pub fn composed_gradient_bound(consts: UniformConstants, n: u32) -> GradientBound {
    let rho = consts.u_over_r;
    let rho2 = rho * rho;
    let exponent = 128.0 * rho2 * consts.psi
        + math::sqrt(
            16384.0 * rho2 * rho2 * consts.psi * consts.psi + 64.0 * (n as f64 - 1.0) * consts.u_k0_sq,
        );
    assemble_bound(2.0 / math::sqrt(3.0) + 32.0 * rho, exponent)
}
