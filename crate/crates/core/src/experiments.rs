//! Oscillation-decay bookkeeping (Harnack constant to Hölder exponent) and
//! the Liouville-type sweep with its weighted-operator diagnostics.

use alloc::vec::Vec;

use crate::barriers::{
    composed_gradient_bound, gradient_bound, uniform_gradient_constants, GradientBound, GradientBoundInputs,
};
use crate::boundary::BoundaryData;
use crate::manifold::WarpedMetric;
use crate::math;
use crate::solver::{
    assemble_rows, check_radii, solve_radius, ConvergenceRow, GridPlan, RadiusSolve, ScalarField,
    SolverConfig,
};
use crate::{Error, Result};

/// Relative slack for dyadic comparisons.
pub const DYADIC_SLACK: f64 = 1e-12;

/// `sup` and `inf` of a function over `B(o, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscSample {
    pub t: f64,
    pub upper: f64,
    pub lower: f64,
}

impl OscSample {
    pub fn osc(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnackRecord {
    pub c0: f64,
    /// `Λ = (C0 - 1) / C0`.
    pub lambda: f64,
    /// `-log Λ / log 2`.
    pub kappa_raw: f64,
    /// `min(1, κ_raw)`.
    pub kappa: f64,
    /// Dyadic samples in increasing `t`.
    pub samples: Vec<OscSample>,
}

pub fn holder_exponent(c0: f64) -> Result<HarnackRecord> {
    if !(c0 > 1.0) || !c0.is_finite() {
        return Err(Error::OutOfRange {
            what: "Harnack constant C0",
            value: c0,
        });
    }
    // Λ = 1 - 1/C0; log1p keeps κ accurate for huge C0.
    let kappa_raw = -math::log1p(-1.0 / c0) / math::LN_2;
    Ok(HarnackRecord {
        c0,
        lambda: (c0 - 1.0) / c0,
        kappa_raw,
        kappa: kappa_raw.min(1.0),
        samples: Vec::new(),
    })
}

impl HarnackRecord {
    /// Attach samples; they must be dyadic with `M ≥ m`, `M` nondecreasing and
    /// `m` nonincreasing.
    pub fn with_samples(mut self, samples: Vec<OscSample>) -> Result<Self> {
        for s in &samples {
            if !(s.t > 0.0) || !(s.upper >= s.lower) {
                return Err(Error::InvalidArgument(
                    "oscillation samples need t > 0 and M >= m",
                ));
            }
        }
        for w in samples.windows(2) {
            if math::abs(w[1].t / w[0].t - 2.0) > DYADIC_SLACK {
                return Err(Error::InvalidArgument("oscillation samples must be dyadic in t"));
            }
            if w[1].upper < w[0].upper || w[1].lower > w[0].lower {
                return Err(Error::InvalidArgument(
                    "M must be nondecreasing and m nonincreasing",
                ));
            }
        }
        self.samples = samples;
        Ok(self)
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        self.samples
            .iter()
            .position(|s| math::abs(s.t / t - 1.0) <= DYADIC_SLACK)
            .ok_or(Error::MissingSample { t })
    }

    pub fn osc_at(&self, t: f64) -> Result<f64> {
        Ok(self.samples[self.index_of(t)?].osc())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCheck {
    /// Both the multi-scale and every single-step inequality hold.
    pub holds: bool,
    /// `osc(r) ≤ 2^κ (r/R)^κ osc(R)`.
    pub chain_holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// First dyad `t ∈ [r, R/2]` with `osc(t) > Λ osc(2t)`.
    pub offending_dyad: Option<f64>,
}

/// Replay the dyadic oscillation decay between scales `r ≤ R`.
pub fn oscillation_decay_check(record: &HarnackRecord, r: f64, big_r: f64) -> Result<DecayCheck> {
    if !(r <= big_r) {
        return Err(Error::InvalidArgument("oscillation decay needs r <= R"));
    }
    let i = record.index_of(r)?;
    let k = record.index_of(big_r)?;
    let s = &record.samples;
    let slack = |v: f64| DYADIC_SLACK * math::abs(v).max(f64::MIN_POSITIVE);
    let lhs = s[i].osc();
    let rhs = math::pow(2.0 * r / big_r, record.kappa) * s[k].osc();
    let chain_holds = lhs <= rhs + slack(rhs);
    let mut offending = None;
    for idx in i..k {
        let step = record.lambda * s[idx + 1].osc();
        if s[idx].osc() > step + slack(step) {
            offending = Some(s[idx].t);
            break;
        }
    }
    Ok(DecayCheck {
        holds: chain_holds && offending.is_none(),
        chain_holds,
        lhs,
        rhs,
        offending_dyad: offending,
    })
}

/// `sup`/`inf` of a discrete field over `B(o, t)`, nodes plus the circle `r = t`.
pub fn ball_extrema(field: &ScalarField, t: f64) -> OscSample {
    let g = field.grid();
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for i in 0..=g.nr() {
        if g.radii()[i] > t {
            break;
        }
        for j in 0..g.n_theta() {
            let v = field.at(i, j);
            hi = hi.max(v);
            lo = lo.min(v);
        }
    }
    let ring = core::iter::once(0.0)
        .chain(g.angles().iter().copied())
        .chain(core::iter::once(math::PI));
    for th in ring {
        let v = field.sample(t.min(g.r_max()), th);
        hi = hi.max(v);
        lo = lo.min(v);
    }
    OscSample {
        t,
        upper: hi,
        lower: lo,
    }
}

/// `σ = (1 + |∇u|²)^{-1/4}` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightReport {
    pub sigma: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Measured `sup |∇u|`.
    pub sup_gradient: f64,
    /// `(1 + G²)^{-1/4}` for the measured `G`.
    pub implied_lower: f64,
    pub meets_lower: bool,
}

pub fn weight_field(field: &ScalarField) -> WeightReport {
    let pts = field.points();
    let sigma: Vec<f64> = pts.iter().map(|p| p.sigma).collect();
    let g = pts
        .iter()
        .map(|p| math::sqrt(p.u_r * p.u_r + p.u_t * p.u_t))
        .fold(0.0, f64::max);
    let min = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sigma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let implied_lower = 1.0 / math::sqrt(math::sqrt(1.0 + g * g));
    WeightReport {
        sigma,
        min,
        max,
        sup_gradient: g,
        implied_lower,
        meets_lower: min >= implied_lower - 1e-12,
    }
}

/// Observed behaviour of `osc_{r=1} u_R` across the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Oscillation vanishes identically.
    Constant,
    /// Fitted decay exponent at least [`DECAY_EXPONENT`].
    Decaying,
    /// Last successive difference below [`STABLE_FRACTION`] of the oscillation.
    Stabilizing,
    Undetermined,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Constant => "constant",
            Regime::Decaying => "liouville regime (decaying)",
            Regime::Stabilizing => "existence regime (stabilizing)",
            Regime::Undetermined => "undetermined",
        }
    }
}

pub const DECAY_EXPONENT: f64 = 0.5;
pub const STABLE_FRACTION: f64 = 0.1;
/// Oscillations below this count as zero.
pub const OSC_FLOOR: f64 = 1e-12;

/// Per-radius output of the Liouville sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleSample {
    pub solve: RadiusSolve,
    /// Largest `|∇u(p)| / bound(p)` over nodes `2 ≤ r ≤ R/2`, with the local
    /// estimate applied to `u - inf b + 1` on `B(p, r/2)`.
    pub local_ratio: f64,
    /// Dyadic `sup`/`inf` samples `t = 1, 2, 4, … ≤ R/2`.
    pub extrema: Vec<OscSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleReport {
    pub ansc: bool,
    pub rows: Vec<ConvergenceRow>,
    pub local_ratios: Vec<Option<f64>>,
    /// `-slope` of `log osc` against `log R` over the last three radii.
    pub decay_exponent: Option<f64>,
    /// `osc(R_{k-1}) / osc(R_k)` for consecutive successful radii.
    pub decay_factors: Vec<f64>,
    pub regime: Regime,
    /// Constant `c` with `u - inf b + 1 ≤ c r` and `K ≥ -c/r²` for `r ≥ 2`.
    pub c: f64,
    pub composed_bound: GradientBound,
    /// Largest measured `sup_{2 ≤ r ≤ R/2} |∇u_R|`.
    pub max_gradient: f64,
    pub gradient_within_bound: bool,
    /// `max_t (M(t) - m(2t)) / (m(t) - m(2t))` on the largest solve.
    pub empirical_c0: Option<f64>,
}

/// Window start for the gradient comparison; the shifted solution is `≥ 1`.
const GRADIENT_R0: f64 = 4.0;

fn curvature_sup_scaled(metric: &WarpedMetric, lo: f64, hi: f64) -> f64 {
    // sup r²|K| on [lo, hi], log-spaced samples.
    let count = 400;
    let mut m = 0.0f64;
    for i in 0..=count {
        let r = lo * math::pow(hi / lo, i as f64 / count as f64);
        if let Ok(k) = metric.curvature_at(r) {
            m = m.max(r * r * math::abs(k));
        }
    }
    m
}

fn curvature_sup(metric: &WarpedMetric, lo: f64, hi: f64) -> f64 {
    let count = 16;
    let mut m = 0.0f64;
    for i in 0..=count {
        let r = lo + (hi - lo) * i as f64 / count as f64;
        if let Ok(k) = metric.curvature_at(r) {
            m = m.max(math::abs(k));
        }
    }
    m
}

/// Solve on `B(o, R)` and collect the Liouville diagnostics.
pub fn liouville_radius(
    metric: &WarpedMetric,
    b: &BoundaryData,
    radius: f64,
    config: &SolverConfig,
    plan: &GridPlan,
) -> Result<LiouvilleSample> {
    let (solve, out) = solve_radius(metric, b, radius, config, plan)?;
    let field = &out.field;
    let g = field.grid();
    let shift = 1.0 - b.norms().min;
    let mut local_ratio = 0.0f64;
    for i in 0..g.nr() {
        let r = g.radii()[i];
        if r < 2.0 || r > 0.5 * radius {
            continue;
        }
        let k0 = math::sqrt(curvature_sup(metric, 0.5 * r, 1.5 * r));
        for j in 0..g.n_theta() {
            let bound = gradient_bound(GradientBoundInputs {
                u_p: field.at(i, j) + shift,
                radius: 0.5 * r,
                k0,
                n: metric.n(),
            })?;
            local_ratio = local_ratio.max(field.grad_norm(i, j) / bound.value);
        }
    }
    let mut extrema = Vec::new();
    let mut t = 1.0;
    while t <= 0.5 * radius {
        extrema.push(ball_extrema(field, t));
        t *= 2.0;
    }
    Ok(LiouvilleSample {
        solve,
        local_ratio,
        extrema,
    })
}

fn fit_decay(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|p| !(p.1 > OSC_FLOOR)) {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| math::log(p.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| math::log(p.1)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(-sxy / sxx)
}

/// Combine per-radius samples (in radius order) into the report.
pub fn liouville_report(
    metric: &WarpedMetric,
    b: &BoundaryData,
    samples: Vec<(f64, Result<LiouvilleSample>)>,
) -> Result<LiouvilleReport> {
    let ansc = metric.declared_tail().map(|t| t.is_ansc()).unwrap_or(false);
    let mut local_ratios = Vec::with_capacity(samples.len());
    let mut last_extrema: Option<Vec<OscSample>> = None;
    let mut solves = Vec::with_capacity(samples.len());
    for (r, s) in samples {
        match s {
            Ok(s) => {
                local_ratios.push(Some(s.local_ratio));
                last_extrema = Some(s.extrema);
                solves.push((r, Ok(s.solve)));
            }
            Err(e) => {
                local_ratios.push(None);
                solves.push((r, Err(e)));
            }
        }
    }
    let rows = assemble_rows(solves);
    let ok: Vec<(&ConvergenceRow, &RadiusSolve)> = rows
        .iter()
        .filter_map(|r| r.solve.as_ref().map(|s| (r, s)))
        .collect();

    let pts: Vec<(f64, f64)> = ok.iter().map(|(_, s)| (s.radius, s.osc)).collect();
    let tail = &pts[pts.len().saturating_sub(3)..];
    let decay_exponent = fit_decay(tail);
    let decay_factors = pts
        .windows(2)
        .filter(|w| w[1].1 > OSC_FLOOR)
        .map(|w| w[0].1 / w[1].1)
        .collect();

    let regime = match ok.last() {
        None => Regime::Undetermined,
        Some(_) if ok.iter().all(|(_, s)| s.osc <= OSC_FLOOR) => Regime::Constant,
        Some((row, s)) => {
            if decay_exponent.is_some_and(|e| e >= DECAY_EXPONENT) {
                Regime::Decaying
            } else if row.successive_diff.is_some_and(|d| d < STABLE_FRACTION * s.osc) {
                Regime::Stabilizing
            } else {
                Regime::Undetermined
            }
        }
    };

    let shifted_sup = b.norms().max - b.norms().min + 1.0;
    let horizon = ok.last().map(|(_, s)| s.radius).unwrap_or(2.0 * GRADIENT_R0);
    let c = (shifted_sup / (0.5 * GRADIENT_R0)).max(curvature_sup_scaled(
        metric,
        0.5 * GRADIENT_R0,
        horizon.max(GRADIENT_R0),
    ));
    let composed_bound = composed_gradient_bound(uniform_gradient_constants(c, metric.n())?, metric.n());
    let max_gradient = ok.iter().map(|(_, s)| s.sup_gradient).fold(0.0, f64::max);

    let empirical_c0 = last_extrema.and_then(|ex| {
        ex.windows(2)
            .filter_map(|w| {
                let den = w[0].lower - w[1].lower;
                (den > OSC_FLOOR).then(|| (w[0].upper - w[1].lower) / den)
            })
            .reduce(f64::max)
    });

    Ok(LiouvilleReport {
        ansc,
        rows,
        local_ratios,
        decay_exponent,
        decay_factors,
        regime,
        c,
        composed_bound,
        max_gradient,
        gradient_within_bound: max_gradient <= composed_bound.value,
        empirical_c0,
    })
}

/// Sweep `radii` with bounded data `b` and classify the oscillation at `r = 1`.
pub fn liouville_experiment(
    metric: &WarpedMetric,
    b: &BoundaryData,
    radii: &[f64],
    config: &SolverConfig,
    plan: &GridPlan,
) -> Result<LiouvilleReport> {
    check_radii(metric, radii)?;
    let samples = radii
        .iter()
        .map(|&r| (r, liouville_radius(metric, b, r, config, plan)))
        .collect();
    liouville_report(metric, b, samples)
}
