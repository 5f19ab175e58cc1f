//! Conservative finite-volume solver for the zonal Dirichlet problem
//! `div(a(|∇u|²) ∇u) = 0` on `B(o, R_max)`, `u = b(θ)` on the boundary.
//!
//! Fluxes live on cell faces. The coefficient `a` is `1/W` for minimal
//! graphs and `(|∇u|² + δ²)^{(p-2)/2}` for the p-Laplacian. Pole faces and the
//! face at the origin carry no flux.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::barriers::Barriers;
use crate::boundary::BoundaryData;
use crate::grid::{build_grid_with, PolarGrid, Stretch, MAX_STRETCH};
use crate::linalg::{BandedMatrix, BandedSpd};
use crate::manifold::WarpedMetric;
use crate::math;
use crate::{Equation, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Iteration {
    /// Lagged coefficients; each step is a symmetric M-matrix solve.
    Picard,
    /// Newton with a finite-difference Jacobian and backtracking.
    DampedNewton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialGuess {
    /// `mean(b) + (b(θ) - mean(b)) r / R_max`.
    BoundaryExtension,
    Constant(f64),
}

/// Backtracking schedule for Newton steps (and relaxation for Picard).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Damping {
    pub shrink: f64,
    pub min_step: f64,
    /// Picard update `u ← (1-ω) u + ω u*`.
    pub relaxation: f64,
}

impl Default for Damping {
    fn default() -> Self {
        Self {
            shrink: 0.5,
            min_step: 1.0 / 64.0,
            relaxation: 1.0,
        }
    }
}

pub const DEFAULT_DELTA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub equation: Equation,
    /// Regularisation of `|∇u|` in the p-Laplace coefficient.
    pub delta: f64,
    pub iteration: Iteration,
    /// Bound on the sup-norm of the flux-balance residual.
    pub tol: f64,
    pub max_iter: usize,
    pub damping: Damping,
    pub initial: InitialGuess,
}

impl SolverConfig {
    /// Defaults: Picard, tolerance `1e-9`, 200 iterations, `δ = 1e-8` and
    /// relaxation 0.7 unless the operator is linear or minimal.
    pub fn new(equation: Equation) -> Self {
        let delta = match equation {
            Equation::PLaplace { p } if p != 2.0 => DEFAULT_DELTA,
            _ => 0.0,
        };
        // Lagged p-Laplace coefficients overshoot; under-relax them.
        let relaxation = if delta > 0.0 { 0.7 } else { 1.0 };
        Self {
            equation,
            delta,
            iteration: Iteration::Picard,
            tol: 1e-9,
            max_iter: 200,
            damping: Damping {
                relaxation,
                ..Damping::default()
            },
            initial: InitialGuess::BoundaryExtension,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::OutOfRange {
                what: "tolerance",
                value: self.tol,
            });
        }
        if !(self.delta >= 0.0) {
            return Err(Error::OutOfRange {
                what: "delta",
                value: self.delta,
            });
        }
        if let Equation::PLaplace { p } = self.equation {
            if !(p > 1.0) {
                return Err(Error::OutOfRange { what: "p", value: p });
            }
            if self.delta == 0.0 && p != 2.0 {
                return Err(Error::InvalidArgument(
                    "delta = 0 is only allowed for nondegenerate operators",
                ));
            }
        }
        let d = self.damping;
        if !(d.shrink > 0.0 && d.shrink < 1.0) || !(d.min_step > 0.0 && d.min_step <= 1.0) {
            return Err(Error::InvalidArgument(
                "damping needs 0 < shrink < 1, 0 < min_step <= 1",
            ));
        }
        if !(d.relaxation > 0.0 && d.relaxation <= 1.0) {
            return Err(Error::OutOfRange {
                what: "relaxation",
                value: d.relaxation,
            });
        }
        Ok(())
    }

    /// Coefficient `a` as a function of `|∇u|²`.
    pub fn coefficient(&self, g2: f64) -> f64 {
        coefficient(self.equation, self.delta, g2)
    }
}

fn coefficient(eq: Equation, delta: f64, g2: f64) -> f64 {
    match eq {
        Equation::Minimal => 1.0 / math::sqrt(1.0 + g2),
        Equation::Harmonic => 1.0,
        Equation::PLaplace { p } => {
            if p == 2.0 {
                1.0
            } else {
                math::pow(g2 + delta * delta, 0.5 * (p - 2.0))
            }
        }
    }
}

/// Discrete solution: values at the `Nr × Nθ` cell nodes (row-major in `r`)
/// and the Dirichlet row at `R_max`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<PolarGrid>,
    u: Vec<f64>,
    boundary: Vec<f64>,
}

/// One exported node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub r: f64,
    pub theta: f64,
    pub u: f64,
    pub u_r: f64,
    /// `u_θ / f`.
    pub u_t: f64,
    pub w: f64,
    pub sigma: f64,
}

impl ScalarField {
    pub fn new(grid: Arc<PolarGrid>, u: Vec<f64>, boundary: Vec<f64>) -> Result<Self> {
        if u.len() != grid.cell_count() || boundary.len() != grid.n_theta() {
            return Err(Error::InvalidArgument("field size does not match the grid"));
        }
        Ok(Self { grid, u, boundary })
    }

    /// Field with every node (boundary row included) set by `g(r, θ)`.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Arc<PolarGrid>, g: F) -> Self {
        let (nr, nt) = (grid.nr(), grid.n_theta());
        let mut u = Vec::with_capacity(nr * nt);
        for i in 0..nr {
            for j in 0..nt {
                u.push(g(grid.radii()[i], grid.angles()[j]));
            }
        }
        let boundary = (0..nt).map(|j| g(grid.r_max(), grid.angles()[j])).collect();
        Self { grid, u, boundary }
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn boundary_values(&self) -> &[f64] {
        &self.boundary
    }

    /// `u(r_i, θ_j)`; `i = Nr` is the boundary row.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        let nt = self.grid.n_theta();
        if i == self.grid.nr() {
            self.boundary[j]
        } else {
            self.u[i * nt + j]
        }
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            u: self.u.iter().map(|&v| g(v)).collect(),
            boundary: self.boundary.iter().map(|&v| g(v)).collect(),
        }
    }

    fn d_theta(&self, i: usize, j: usize) -> f64 {
        let nt = self.grid.n_theta();
        let lo = if j == 0 { self.at(i, 0) } else { self.at(i, j - 1) };
        let hi = if j + 1 == nt {
            self.at(i, nt - 1)
        } else {
            self.at(i, j + 1)
        };
        (hi - lo) / (2.0 * self.grid.dtheta())
    }

    fn d_r(&self, i: usize, j: usize) -> f64 {
        let r = self.grid.radii();
        let nr = self.grid.nr();
        if i == 0 {
            (self.at(1, j) - self.at(0, j)) / (r[1] - r[0])
        } else if i == nr {
            (self.at(nr, j) - self.at(nr - 1, j)) / (r[nr] - r[nr - 1])
        } else {
            (self.at(i + 1, j) - self.at(i - 1, j)) / (r[i + 1] - r[i - 1])
        }
    }

    /// `(u_r, u_θ / f)` at node `(i, j)`.
    pub fn gradient(&self, i: usize, j: usize) -> (f64, f64) {
        (self.d_r(i, j), self.d_theta(i, j) / self.grid.f_node(i))
    }

    pub fn grad_norm(&self, i: usize, j: usize) -> f64 {
        let (a, b) = self.gradient(i, j);
        math::sqrt(a * a + b * b)
    }

    /// `W = √(1 + |∇u|²)`.
    pub fn w(&self, i: usize, j: usize) -> f64 {
        let g = self.grad_norm(i, j);
        math::sqrt(1.0 + g * g)
    }

    /// `σ = W^{-1/2}`.
    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        1.0 / math::sqrt(self.w(i, j))
    }

    /// All nodes, boundary row last, in row-major order.
    pub fn points(&self) -> Vec<FieldPoint> {
        let (nr, nt) = (self.grid.nr(), self.grid.n_theta());
        let mut out = Vec::with_capacity((nr + 1) * nt);
        for i in 0..=nr {
            for j in 0..nt {
                let (u_r, u_t) = self.gradient(i, j);
                let w = math::sqrt(1.0 + u_r * u_r + u_t * u_t);
                out.push(FieldPoint {
                    r: self.grid.radii()[i],
                    theta: self.grid.angles()[j],
                    u: self.at(i, j),
                    u_r,
                    u_t,
                    w,
                    sigma: 1.0 / math::sqrt(w),
                });
            }
        }
        out
    }

    /// Largest `|∇u|` over nodes with `r_lo ≤ r ≤ r_hi`.
    pub fn sup_gradient(&self, r_lo: f64, r_hi: f64) -> f64 {
        let (nr, nt) = (self.grid.nr(), self.grid.n_theta());
        let mut m = 0.0f64;
        for i in 0..=nr {
            let r = self.grid.radii()[i];
            if r < r_lo || r > r_hi {
                continue;
            }
            for j in 0..nt {
                m = m.max(self.grad_norm(i, j));
            }
        }
        m
    }

    pub fn min(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.boundary)
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.boundary)
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Value on row `i` at angle `θ`, linear between nodes, with even
    /// extrapolation `u_1 + (u_1 - u_2)/8` to the poles.
    fn row_sample(&self, i: usize, theta: f64) -> f64 {
        let nt = self.grid.n_theta();
        let dt = self.grid.dtheta();
        let x = theta / dt - 0.5;
        if x <= 0.0 {
            let pole = self.at(i, 0) + (self.at(i, 0) - self.at(i, 1)) / 8.0;
            let s = (theta / (0.5 * dt)).clamp(0.0, 1.0);
            return pole + s * (self.at(i, 0) - pole);
        }
        if x >= (nt - 1) as f64 {
            let pole = self.at(i, nt - 1) + (self.at(i, nt - 1) - self.at(i, nt - 2)) / 8.0;
            let s = ((math::PI - theta) / (0.5 * dt)).clamp(0.0, 1.0);
            return pole + s * (self.at(i, nt - 1) - pole);
        }
        let j = x as usize;
        let s = x - j as f64;
        self.at(i, j) + s * (self.at(i, j + 1) - self.at(i, j))
    }

    /// `θ`-independent value at the origin: `sin^{n-2}`-weighted mean of row 0.
    fn origin_value(&self) -> f64 {
        let nt = self.grid.n_theta();
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..nt {
            let w = self.grid.sin_int(j);
            num += w * self.at(0, j);
            den += w;
        }
        num / den
    }

    /// Interpolated value at `(r, θ)`, `0 ≤ r ≤ R_max`.
    pub fn sample(&self, r: f64, theta: f64) -> f64 {
        let radii = self.grid.radii();
        if r <= radii[0] {
            let c = self.origin_value();
            let s = (r / radii[0]).clamp(0.0, 1.0);
            return c + s * (self.row_sample(0, theta) - c);
        }
        let nr = self.grid.nr();
        if r >= radii[nr] {
            return self.row_sample(nr, theta);
        }
        let i = radii.partition_point(|&x| x <= r) - 1;
        let s = (r - radii[i]) / (radii[i + 1] - radii[i]);
        let (a, b) = (self.row_sample(i, theta), self.row_sample(i + 1, theta));
        a + s * (b - a)
    }
}

/// Face transmissibilities for a given state.
struct Faces {
    /// Radial face between rows `i` and `i+1`, index `i·Nθ + j`.
    radial: Vec<f64>,
    /// Angular face between `j` and `j+1` on row `i`, index `i·(Nθ-1) + j`.
    angular: Vec<f64>,
}

fn transmissibilities(field: &ScalarField, eq: Equation, delta: f64) -> Faces {
    let g = &field.grid;
    let (nr, nt) = (g.nr(), g.n_theta());
    let r = g.radii();
    let dt = g.dtheta();
    let mut radial = vec![0.0; nr * nt];
    let mut angular = vec![0.0; nr * (nt - 1)];
    // Angular derivatives at nodes, reused by both adjacent radial faces.
    let mut dth = vec![0.0; (nr + 1) * nt];
    let mut dr = vec![0.0; nr * nt];
    for i in 0..=nr {
        for j in 0..nt {
            dth[i * nt + j] = field.d_theta(i, j);
            if i < nr {
                dr[i * nt + j] = field.d_r(i, j);
            }
        }
    }
    for i in 0..nr {
        let h = r[i + 1] - r[i];
        let ff = g.f_face(i + 1);
        let geo = g.area(i + 1) / h;
        for j in 0..nt {
            let ur = (field.at(i + 1, j) - field.at(i, j)) / h;
            let ut = 0.5 * (dth[i * nt + j] + dth[(i + 1) * nt + j]) / ff;
            let a = coefficient(eq, delta, ur * ur + ut * ut);
            radial[i * nt + j] = a * geo * g.sin_int(j);
        }
        let fi = g.f_node(i);
        let geo = g.ang_weight(i) / dt;
        for j in 0..nt - 1 {
            let ut = (field.at(i, j + 1) - field.at(i, j)) / (dt * fi);
            let ur = 0.5 * (dr[i * nt + j] + dr[i * nt + j + 1]);
            let a = coefficient(eq, delta, ur * ur + ut * ut);
            angular[i * (nt - 1) + j] = a * geo * g.sin_face(j + 1);
        }
    }
    Faces { radial, angular }
}

/// Net flux `Σ T (u_nbr - u)` into every cell.
fn flux_balance(field: &ScalarField, faces: &Faces) -> Vec<f64> {
    let g = &field.grid;
    let (nr, nt) = (g.nr(), g.n_theta());
    let mut out = vec![0.0; nr * nt];
    for i in 0..nr {
        for j in 0..nt {
            let t = faces.radial[i * nt + j];
            let q = t * (field.at(i + 1, j) - field.at(i, j));
            out[i * nt + j] += q;
            if i + 1 < nr {
                out[(i + 1) * nt + j] -= q;
            }
        }
        for j in 0..nt - 1 {
            let t = faces.angular[i * (nt - 1) + j];
            let q = t * (field.at(i, j + 1) - field.at(i, j));
            out[i * nt + j] += q;
            out[i * nt + j + 1] -= q;
        }
    }
    out
}

fn scaled_sup(grid: &PolarGrid, flux: &[f64]) -> f64 {
    let nt = grid.n_theta();
    flux.iter()
        .enumerate()
        .map(|(k, &v)| math::abs(v) / grid.volume(k / nt, k % nt))
        .fold(0.0, f64::max)
}

/// Flux-balance residual `(1/|cell|) Σ_faces a ∂_ν u` at every unknown node.
pub fn residual_field(field: &ScalarField, equation: Equation, delta: f64) -> Vec<f64> {
    let faces = transmissibilities(field, equation, delta);
    let flux = flux_balance(field, &faces);
    let nt = field.grid.n_theta();
    flux.iter()
        .enumerate()
        .map(|(k, &v)| v / field.grid.volume(k / nt, k % nt))
        .collect()
}

/// Sup-norm of [`residual_field`].
pub fn residual_norm(field: &ScalarField, equation: Equation, delta: f64) -> f64 {
    residual_field(field, equation, delta)
        .iter()
        .fold(0.0, |m, v| m.max(math::abs(*v)))
}

/// Volume-weighted RMS of [`residual_field`]; the origin and pole cells carry
/// `O(h)` truncation error which this norm weights by their small volume.
pub fn residual_l2(field: &ScalarField, equation: Equation, delta: f64) -> f64 {
    let res = residual_field(field, equation, delta);
    let g = &field.grid;
    let nt = g.n_theta();
    let (mut num, mut den) = (0.0, 0.0);
    for (k, v) in res.iter().enumerate() {
        let vol = g.volume(k / nt, k % nt);
        num += vol * v * v;
        den += vol;
    }
    math::sqrt(num / den)
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub field: ScalarField,
    /// Outer iterations performed (0 if the initial guess already solves).
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

fn initial_field(grid: &Arc<PolarGrid>, config: &SolverConfig, b: &BoundaryData) -> ScalarField {
    let nt = grid.n_theta();
    let boundary: Vec<f64> = grid.angles().iter().map(|&t| b.value(t)).collect();
    let u = match config.initial {
        InitialGuess::Constant(c) => vec![c; grid.cell_count()],
        InitialGuess::BoundaryExtension => {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..nt {
                num += grid.sin_int(j) * boundary[j];
                den += grid.sin_int(j);
            }
            let (lo, hi) = boundary
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                    (l.min(v), h.max(v))
                });
            let mean = if lo == hi { lo } else { num / den };
            let rm = grid.r_max();
            let mut u = Vec::with_capacity(grid.cell_count());
            for &r in &grid.radii()[..grid.nr()] {
                for bj in &boundary {
                    u.push(if *bj == mean {
                        mean
                    } else {
                        mean + (bj - mean) * r / rm
                    });
                }
            }
            u
        }
    };
    ScalarField {
        grid: grid.clone(),
        u,
        boundary,
    }
}

/// Solve the Dirichlet problem on `grid` with boundary values `b(θ_j)`.
pub fn solve_dirichlet(
    grid: &Arc<PolarGrid>,
    config: &SolverConfig,
    b: &BoundaryData,
) -> Result<SolveOutcome> {
    config.validate()?;
    if b.n() != grid.n() {
        return Err(Error::InvalidArgument(
            "boundary data and metric dimensions differ",
        ));
    }
    let mut field = initial_field(grid, config, b);
    match config.iteration {
        Iteration::Picard => picard(field, config),
        Iteration::DampedNewton => {
            let st = newton(&mut field, config)?;
            Ok(SolveOutcome {
                field,
                iterations: st.iterations,
                residual: st.residual,
                history: st.history,
            })
        }
    }
}

fn picard(mut field: ScalarField, config: &SolverConfig) -> Result<SolveOutcome> {
    let grid = field.grid.clone();
    let (nr, nt) = (grid.nr(), grid.n_theta());
    let n = nr * nt;
    let omega = config.damping.relaxation;
    let mut history = Vec::new();
    for it in 0..=config.max_iter {
        let faces = transmissibilities(&field, config.equation, config.delta);
        let res = scaled_sup(&grid, &flux_balance(&field, &faces));
        history.push(res);
        if res <= config.tol {
            return Ok(SolveOutcome {
                field,
                iterations: it,
                residual: res,
                history,
            });
        }
        if it == config.max_iter || !res.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        let mut m = BandedSpd::zeros(n, nt);
        let mut rhs = vec![0.0; n];
        for i in 0..nr {
            for j in 0..nt {
                let c = i * nt + j;
                let t = faces.radial[c];
                m.add(c, c, t);
                if i + 1 < nr {
                    m.add(c + nt, c + nt, t);
                    m.add(c + nt, c, -t);
                } else {
                    rhs[c] += t * field.boundary[j];
                }
            }
            for j in 0..nt - 1 {
                let t = faces.angular[i * (nt - 1) + j];
                let c = i * nt + j;
                m.add(c, c, t);
                m.add(c + 1, c + 1, t);
                m.add(c + 1, c, -t);
            }
        }
        let next = m.factor()?.solve(&rhs);
        for (u, v) in field.u.iter_mut().zip(next) {
            *u = (1.0 - omega) * *u + omega * v;
        }
    }
    unreachable!()
}

struct NewtonState {
    iterations: usize,
    residual: f64,
    history: Vec<f64>,
}

fn full_flux(field: &ScalarField, config: &SolverConfig) -> Vec<f64> {
    let faces = transmissibilities(field, config.equation, config.delta);
    flux_balance(field, &faces)
}

fn newton(field: &mut ScalarField, config: &SolverConfig) -> Result<NewtonState> {
    let grid = field.grid.clone();
    let (nr, nt) = (grid.nr(), grid.n_theta());
    let n = nr * nt;
    let mut history = Vec::new();
    let mut flux = full_flux(field, config);
    let mut res = scaled_sup(&grid, &flux);
    for it in 0..=config.max_iter {
        history.push(res);
        if res <= config.tol {
            return Ok(NewtonState {
                iterations: it,
                residual: res,
                history,
            });
        }
        if it == config.max_iter || !res.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        // Nine-colour finite-difference Jacobian of the 9-point stencil.
        let band = nt + 1;
        let mut jac = BandedMatrix::zeros(n, band, band);
        let scale = field.u.iter().fold(0.0f64, |m, v| m.max(math::abs(*v))).max(1e-3);
        let eps = 1e-7 * scale;
        for ci in 0..3 {
            for cj in 0..3 {
                let mut probe = field.clone();
                for i in (ci..nr).step_by(3) {
                    for j in (cj..nt).step_by(3) {
                        probe.u[i * nt + j] += eps;
                    }
                }
                let pf = full_flux(&probe, config);
                for i in (ci..nr).step_by(3) {
                    for j in (cj..nt).step_by(3) {
                        let col = i * nt + j;
                        for ii in i.saturating_sub(1)..=(i + 1).min(nr - 1) {
                            for jj in j.saturating_sub(1)..=(j + 1).min(nt - 1) {
                                let row = ii * nt + jj;
                                jac.set(row, col, (pf[row] - flux[row]) / eps);
                            }
                        }
                    }
                }
            }
        }
        let rhs: Vec<f64> = flux.iter().map(|v| -v).collect();
        let step = jac.factor()?.solve(&rhs);
        let mut lambda = 1.0;
        loop {
            let mut trial = field.clone();
            for (u, s) in trial.u.iter_mut().zip(&step) {
                *u += lambda * s;
            }
            let tf = full_flux(&trial, config);
            let tr = scaled_sup(&grid, &tf);
            if tr < (1.0 - 1e-4 * lambda) * res {
                *field = trial;
                flux = tf;
                res = tr;
                break;
            }
            lambda *= config.damping.shrink;
            if lambda < config.damping.min_step {
                return Err(Error::NoConvergence {
                    iterations: it + 1,
                    residual: res,
                });
            }
        }
    }
    unreachable!()
}

/// One node outside the barrier bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub r: f64,
    pub theta: f64,
    pub u: f64,
    pub lower: f64,
    pub upper: f64,
    /// Distance outside `[lower - tol, upper + tol]`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub tol: f64,
    pub checked: usize,
    /// Largest `max(lower - u, u - upper)` over all nodes (negative inside).
    pub worst: f64,
    pub violations: Vec<Violation>,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check `max(d, -η + B) - tol ≤ u ≤ min(a, η + B) + tol` at every node,
/// boundary row included.
pub fn sandwich_check(field: &ScalarField, barriers: &Barriers, tol: f64) -> Result<SandwichReport> {
    let g = &field.grid;
    let (nr, nt) = (g.nr(), g.n_theta());
    let mut report = SandwichReport {
        tol,
        checked: 0,
        worst: f64::NEG_INFINITY,
        violations: Vec::new(),
    };
    for i in 0..=nr {
        let r = g.radii()[i];
        for j in 0..nt {
            let theta = g.angles()[j];
            let u = field.at(i, j);
            let lower = barriers.lower(r, theta)?;
            let upper = barriers.upper(r, theta)?;
            let gap = (lower - u).max(u - upper);
            report.worst = report.worst.max(gap);
            report.checked += 1;
            if gap > tol {
                report.violations.push(Violation {
                    i,
                    j,
                    r,
                    theta,
                    u,
                    lower,
                    upper,
                    excess: gap - tol,
                });
            }
        }
    }
    Ok(report)
}

/// Radial resolution rule for a sweep over ball radii: first cell width
/// `first_width`, spacings growing by at most `max_ratio`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPlan {
    pub n_theta: usize,
    pub first_width: f64,
    pub max_ratio: f64,
}

impl Default for GridPlan {
    fn default() -> Self {
        Self {
            n_theta: 32,
            first_width: 0.05,
            max_ratio: 1.05,
        }
    }
}

impl GridPlan {
    /// Fewest radial rows (at least 8) reaching `r_max`.
    pub fn grid_for(&self, metric: &WarpedMetric, r_max: f64) -> Result<PolarGrid> {
        let h = self.first_width;
        let s = self.max_ratio;
        if !(h > 0.0) || !(1.0..=MAX_STRETCH).contains(&s) {
            return Err(Error::InvalidArgument(
                "grid plan needs first_width > 0, 1 <= max_ratio <= 1.2",
            ));
        }
        let target = r_max / h;
        if target <= 8.5 {
            return build_grid_with(metric, r_max, 8, self.n_theta, Stretch::Uniform);
        }
        let uniform_rows = math::ceil(target - 0.5) as usize;
        let (mut acc, mut p, mut rows) = (0.5, 1.0, 0usize);
        while acc < target {
            acc += p;
            p *= s;
            rows += 1;
        }
        let rows = rows.max(8);
        if rows >= uniform_rows {
            build_grid_with(metric, r_max, uniform_rows.max(8), self.n_theta, Stretch::Uniform)
        } else {
            build_grid_with(metric, r_max, rows, self.n_theta, Stretch::FirstWidth(h))
        }
    }
}

/// Probe radii and angles on `B(o, 1)` for successive-difference tracking.
pub const PROBE_RADII: usize = 20;
pub const PROBE_ANGLES: usize = 33;

fn probe_values(field: &ScalarField) -> Vec<f64> {
    let mut out = Vec::with_capacity(PROBE_RADII * PROBE_ANGLES);
    for a in 1..=PROBE_RADII {
        let r = a as f64 / PROBE_RADII as f64;
        for b in 0..PROBE_ANGLES {
            let t = math::PI * b as f64 / (PROBE_ANGLES - 1) as f64;
            out.push(field.sample(r, t));
        }
    }
    out
}

/// `max - min` of `u(1, θ)` over the grid angles and both poles.
pub fn inner_oscillation(field: &ScalarField) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let angles = core::iter::once(0.0)
        .chain(field.grid.angles().iter().copied())
        .chain(core::iter::once(math::PI));
    for t in angles {
        let v = field.sample(1.0, t);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// Summary of one solve in a radius sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSolve {
    pub radius: f64,
    pub nr: usize,
    pub n_theta: usize,
    pub iterations: usize,
    pub residual: f64,
    /// `osc_{r=1} u_R`.
    pub osc: f64,
    /// `u_R(1, θ = 0)`.
    pub pole_value: f64,
    /// `sup |∇u_R|` over nodes with `2 ≤ r ≤ R/2` (0 if none).
    pub sup_gradient: f64,
    pub min_u: f64,
    pub max_u: f64,
    /// Values on the fixed probe set in `B(o, 1)`.
    pub probe: Vec<f64>,
}

/// Solve on `B(o, radius)` with the plan's grid and summarise.
pub fn solve_radius(
    metric: &WarpedMetric,
    b: &BoundaryData,
    radius: f64,
    config: &SolverConfig,
    plan: &GridPlan,
) -> Result<(RadiusSolve, SolveOutcome)> {
    if !(radius > 1.0) {
        return Err(Error::OutOfRange {
            what: "ball radius",
            value: radius,
        });
    }
    let grid = Arc::new(plan.grid_for(metric, radius)?);
    let out = solve_dirichlet(&grid, config, b)?;
    let f = &out.field;
    let summary = RadiusSolve {
        radius,
        nr: grid.nr(),
        n_theta: grid.n_theta(),
        iterations: out.iterations,
        residual: out.residual,
        osc: inner_oscillation(f),
        pole_value: f.sample(1.0, 0.0),
        sup_gradient: f.sup_gradient(2.0, 0.5 * radius),
        min_u: f.min(),
        max_u: f.max(),
        probe: probe_values(f),
    };
    Ok((summary, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub radius: f64,
    pub solve: Option<RadiusSolve>,
    pub error: Option<Error>,
    /// Sup-distance on the probe set to the previous successful radius.
    pub successive_diff: Option<f64>,
}

/// Attach successive differences to per-radius results (in radius order).
pub fn assemble_rows(results: Vec<(f64, Result<RadiusSolve>)>) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(results.len());
    let mut prev: Option<Vec<f64>> = None;
    for (radius, res) in results {
        match res {
            Ok(s) => {
                let diff = prev.as_ref().map(|p| {
                    p.iter()
                        .zip(&s.probe)
                        .map(|(a, b)| math::abs(a - b))
                        .fold(0.0, f64::max)
                });
                prev = Some(s.probe.clone());
                rows.push(ConvergenceRow {
                    radius,
                    solve: Some(s),
                    error: None,
                    successive_diff: diff,
                });
            }
            Err(e) => rows.push(ConvergenceRow {
                radius,
                solve: None,
                error: Some(e),
                successive_diff: None,
            }),
        }
    }
    rows
}

/// Radii must be increasing, above 1 and inside the metric domain.
pub fn check_radii(metric: &WarpedMetric, radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("radius list is empty"));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("radii must be strictly increasing"));
    }
    if radii[0] <= 1.0 {
        return Err(Error::OutOfRange {
            what: "ball radius",
            value: radii[0],
        });
    }
    let last = radii[radii.len() - 1];
    if last > metric.r_max() {
        return Err(Error::Domain {
            r: last,
            r_max: metric.r_max(),
        });
    }
    Ok(())
}

/// Solve on each `B(o, R)` and track `u_R` on the unit ball. Per-radius
/// failures are recorded in the row and the sweep continues.
pub fn boundary_convergence_experiment(
    metric: &WarpedMetric,
    b: &BoundaryData,
    radii: &[f64],
    config: &SolverConfig,
    plan: &GridPlan,
) -> Result<Vec<ConvergenceRow>> {
    check_radii(metric, radii)?;
    let results = radii
        .iter()
        .map(|&r| (r, solve_radius(metric, b, r, config, plan).map(|(s, _)| s)))
        .collect();
    Ok(assemble_rows(results))
}
