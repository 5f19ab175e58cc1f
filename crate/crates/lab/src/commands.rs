//! The four subcommands. Each reads a validated [`RunConfig`] and writes its
//! artifacts into the output directory.

use std::sync::Arc;

use asymdir_core::barriers::{choose_k_and_r0, residual_at};
use asymdir_core::boundary::BoundaryData;
use asymdir_core::criteria::Form;
use asymdir_core::criteria::{
    j_integral_with, p_integral_with, parabolicity_check_with, threshold_scan, ConvergenceVerdict,
};
use asymdir_core::experiments::{
    ball_extrema, holder_exponent, liouville_radius, liouville_report, oscillation_decay_check, weight_field,
    LiouvilleSample, OscSample,
};
use asymdir_core::grid::build_grid_with;
use asymdir_core::manifold::{CurvatureProfile, MarchSearch, TailLaw, WarpedMetric};
use asymdir_core::solver::{
    assemble_rows, check_radii, residual_field, residual_l2, sandwich_check, solve_dirichlet, solve_radius,
    ConvergenceRow, RadiusSolve, PROBE_ANGLES, PROBE_RADII,
};
use asymdir_core::Error as CoreError;
use rayon::prelude::*;

use crate::config::{ExperimentKind, FamilySpec, Lowered, MetricPlan, RunConfig};
use crate::io::{encode_field, num, opt, OutDir, Report};
use crate::{RunError, Stage};

const VERDICT_HEADER: [&str; 15] = [
    "test",
    "form",
    "p",
    "status",
    "value",
    "partial",
    "tail_bound",
    "tail_q",
    "tail_m",
    "warp_q",
    "warp_m",
    "horizon",
    "truncated",
    "conclusion",
    "n",
];

fn verdict_row(
    test: &str,
    form: &str,
    p: Option<f64>,
    v: &ConvergenceVerdict,
    conclusion: &str,
    n: u32,
) -> Vec<String> {
    vec![
        test.into(),
        form.into(),
        opt(p),
        v.status.as_str().into(),
        opt(v.value),
        num(v.partial),
        num(v.tail_bound),
        num(v.tail_rate.q),
        num(v.tail_rate.m),
        num(v.warp_rate.q),
        num(v.warp_rate.m),
        num(v.horizon),
        v.truncated.to_string(),
        conclusion.into(),
        n.to_string(),
    ]
}

fn form_name(f: Form) -> &'static str {
    match f {
        Form::Nested => "nested",
        Form::Swapped => "swapped",
    }
}

pub fn classify(cfg: &RunConfig, lo: &Lowered, out: &OutDir) -> Result<(), RunError> {
    let metric = lo.metric.build().at("metric")?;
    let opts = lo.criteria;
    let n = metric.n();
    let mut rows = Vec::new();
    let mut report = Report::new(cfg, "classify", &["criteria", "classification"]);

    for &form in &lo.j_forms {
        let v = j_integral_with(&metric, form, opts).at("J integral")?;
        log::info!("J ({}) {}", form_name(form), v.status.as_str());
        report
            .section(&format!("J-{}", form_name(form)))
            .set("status", v.status.as_str())
            .maybe("value", v.value);
        rows.push(verdict_row("J", form_name(form), None, &v, v.status.as_str(), n));
    }
    for &p in &lo.p {
        let v = p_integral_with(&metric, p, lo.p_form, opts).at("p integral")?;
        report
            .section(&format!("p-integral-{p}"))
            .set("status", v.status.as_str())
            .maybe("value", v.value);
        rows.push(verdict_row(
            "p-integral",
            form_name(lo.p_form),
            Some(p),
            &v,
            v.status.as_str(),
            n,
        ));
    }
    for &p in &lo.parabolicity_p {
        let r = parabolicity_check_with(&metric, p, opts).at("parabolicity")?;
        report
            .section(&format!("parabolicity-{p}"))
            .set("status", r.verdict.status.as_str())
            .set("conclusion", r.conclusion.as_str());
        rows.push(verdict_row(
            "parabolicity",
            "volume",
            Some(p),
            &r.verdict,
            r.conclusion.as_str(),
            n,
        ));
    }
    out.csv("verdicts.csv", &VERDICT_HEADER, rows)?;

    // Convexity audit of f on a log grid up to the horizon.
    let top = metric.r_max().min(opts.horizon);
    let samples: Vec<f64> = (0..=400)
        .map(|i| 1e-3 * (top / 1e-3).powf(i as f64 / 400.0))
        .collect();
    let min_ddf = metric.min_second_derivative(&samples);
    report
        .section("convexity")
        .set("min_f_second_derivative", min_ddf)
        .set("tol_convex", lo.tol_convex)
        .set("convex", min_ddf >= -lo.tol_convex);

    if let Some((kind, criterion, range, tol, r_max)) = lo.scan {
        let (onset, search) = match lo.metric {
            MetricPlan::Curvature { onset, .. } => (onset, MarchSearch::default()),
            MetricPlan::March { search, .. } => (3.0, search),
            MetricPlan::Closed { .. } => (3.0, MarchSearch::default()),
        };
        let family = |c: f64| -> asymdir_core::Result<WarpedMetric> {
            match kind {
                FamilySpec::March => WarpedMetric::march_with(c, n, search),
                FamilySpec::PowerLog => WarpedMetric::from_curvature(
                    CurvatureProfile::new(TailLaw::PowerLog { c }, onset)?,
                    n,
                    r_max,
                ),
            }
        };
        let est = threshold_scan(family, criterion, range, tol, opts.horizon).at("threshold scan")?;
        out.csv(
            "scan.csv",
            &["step", "c", "status"],
            est.evaluations
                .iter()
                .enumerate()
                .map(|(i, (c, s))| vec![i.to_string(), num(*c), s.as_str().into()]),
        )?;
        report
            .section("scan")
            .set("threshold", est.c)
            .set("lower", est.lower)
            .set("upper", est.upper)
            .count("evaluations", est.evaluations.len());
    }
    out.text("report.toml", &report.render())?;
    Ok(())
}

pub fn verify_barrier(cfg: &RunConfig, lo: &Lowered, out: &OutDir) -> Result<(), RunError> {
    let metric = lo.metric.build().at("metric")?;
    let b = BoundaryData::preset(lo.boundary, metric.n()).at("boundary data")?;
    let eq = lo.equation;
    let search = lo.barrier;
    let bar = choose_k_and_r0(&metric, eq, &b, search).at("barrier search")?;
    let c = &bar.certificate;
    log::info!("certified k = {}, r0 = {}", c.k, c.r0);

    let mut cert = Report::new(cfg, "verify-barrier", &["barrier", "certificate"]);
    cert.section("certificate")
        .set("equation", eq.name())
        .maybe("p", eq.p())
        .set("k", c.k)
        .set("r0", c.r0)
        .set("a", c.a)
        .set("d", c.d)
        .set("eta_r0", c.eta_r0)
        .set("max_residual", c.max_residual)
        .set("checked_R_max", c.checked_r_max)
        .count("doublings", c.doublings as usize)
        .set("eta_horizon", c.eta_horizon)
        .set("horizon", c.horizon);
    out.text("certificate.toml", &cert.render())?;

    let profile = match lo.barrier_k {
        None => bar.profile.clone(),
        Some(k) if k > 0.0 => bar.profile.with_k(k),
        Some(k) => return Err(RunError::Config(format!("barrier.k = {k} must be positive"))),
    };
    let radii = search.radii(profile.horizon());
    let angles = search.angles();
    let mut rows = Vec::with_capacity(radii.len() * angles.len());
    let mut worst_outside = f64::NEG_INFINITY;
    for &r in &radii {
        for &th in &angles {
            let v = residual_at(&profile, &bar.b, r, th).at("residual field")?;
            if r >= c.r0 {
                worst_outside = worst_outside.max(v);
            }
            rows.push(vec![num(r), num(th), num(v), (r >= c.r0).to_string()]);
        }
    }
    out.csv("residual.csv", &["r", "theta", "residual", "beyond_r0"], rows)?;

    let mut report = Report::new(cfg, "verify-barrier", &["barrier", "residual"]);
    report
        .section("residual")
        .set("k", profile.k())
        .set("max_beyond_r0", worst_outside)
        .set("nonpositive_beyond_r0", worst_outside <= 0.0)
        .count("samples", radii.len() * angles.len());
    out.text("report.toml", &report.render())?;
    Ok(())
}

pub fn solve(cfg: &RunConfig, lo: &Lowered, out: &OutDir) -> Result<(), RunError> {
    let metric = lo.metric.build().at("metric")?;
    let b = BoundaryData::preset(lo.boundary, metric.n()).at("boundary data")?;
    let eq = lo.equation;
    let (r_max, nr, n_theta, stretch) = lo.grid;
    let grid = Arc::new(build_grid_with(&metric, r_max, nr, n_theta, stretch).at("grid")?);
    let config = lo.solver;
    config.validate().at("solver config")?;
    let outcome = solve_dirichlet(&grid, &config, &b).at("solve")?;
    let field = &outcome.field;
    log::info!(
        "converged in {} iterations, residual {:e}",
        outcome.iterations,
        outcome.residual
    );

    out.csv(
        "field.csv",
        &["r", "theta", "u", "u_r", "u_theta_over_f", "W", "sigma"],
        field.points().into_iter().map(|p| {
            vec![
                num(p.r),
                num(p.theta),
                num(p.u),
                num(p.u_r),
                num(p.u_t),
                num(p.w),
                num(p.sigma),
            ]
        }),
    )?;
    out.bytes("field.adlb", &encode_field(field))?;
    let res = residual_field(field, eq, config.delta);
    let nt = grid.n_theta();
    out.csv(
        "residual.csv",
        &["r", "theta", "residual"],
        res.iter()
            .enumerate()
            .map(|(k, v)| vec![num(grid.radii()[k / nt]), num(grid.angles()[k % nt]), num(*v)]),
    )?;
    out.csv(
        "history.csv",
        &["iteration", "residual"],
        outcome
            .history
            .iter()
            .enumerate()
            .map(|(i, r)| vec![i.to_string(), num(*r)]),
    )?;

    let weights = weight_field(field);
    let mut report = Report::new(cfg, "solve", &["dirichlet", "field"]);
    report
        .section("solve")
        .set("equation", eq.name())
        .count("nr", grid.nr())
        .count("n_theta", nt)
        .set("max_stretch", grid.max_stretch())
        .count("iterations", outcome.iterations)
        .set("residual_sup", outcome.residual)
        .set("residual_l2", residual_l2(field, eq, config.delta))
        .set("min_u", field.min())
        .set("max_u", field.max())
        .set("delta", config.delta)
        .set("relaxation", config.damping.relaxation);
    report
        .section("weights")
        .set("sigma_min", weights.min)
        .set("sigma_max", weights.max)
        .set("sup_gradient", weights.sup_gradient)
        .set("implied_lower", weights.implied_lower)
        .set("meets_lower", weights.meets_lower);

    if let Some(tol) = lo.sandwich {
        let bar = choose_k_and_r0(&metric, eq, &b, lo.barrier).at("barrier search")?;
        let s = sandwich_check(field, &bar, tol).at("sandwich check")?;
        out.csv(
            "violations.csv",
            &["i", "j", "r", "theta", "u", "lower", "upper", "excess"],
            s.violations.iter().map(|v| {
                vec![
                    v.i.to_string(),
                    v.j.to_string(),
                    num(v.r),
                    num(v.theta),
                    num(v.u),
                    num(v.lower),
                    num(v.upper),
                    num(v.excess),
                ]
            }),
        )?;
        report
            .section("sandwich")
            .set("holds", s.holds())
            .set("tol", s.tol)
            .count("checked", s.checked)
            .set("worst_excess", s.worst)
            .count("violations", s.violations.len())
            .set("k", bar.certificate.k)
            .set("r0", bar.certificate.r0);
    }
    out.text("report.toml", &report.render())?;
    Ok(())
}

pub fn experiment(cfg: &RunConfig, lo: &Lowered, out: &OutDir) -> Result<(), RunError> {
    let metric = lo.metric.build().at("metric")?;
    let b = BoundaryData::preset(lo.boundary, metric.n()).at("boundary data")?;
    let config = lo.solver;
    config.validate().at("solver config")?;
    let plan = lo.plan;
    match lo.experiment {
        ExperimentKind::BoundaryConvergence => {
            check_radii(&metric, &lo.radii).at("radii")?;
            let results: Vec<(f64, asymdir_core::Result<RadiusSolve>)> = lo
                .radii
                .par_iter()
                .map(|&r| (r, solve_radius(&metric, &b, r, &config, &plan).map(|(s, _)| s)))
                .collect();
            let rows = assemble_rows(results);
            all_failed(&rows)?;
            write_rows(out, &rows, None)?;
            let mut report = Report::new(cfg, "experiment", &["boundary-convergence", "sweep"]);
            sweep_summary(&mut report, &rows);
            out.text("report.toml", &report.render())?;
        }
        ExperimentKind::Liouville => {
            check_radii(&metric, &lo.radii).at("radii")?;
            let samples: Vec<(f64, asymdir_core::Result<LiouvilleSample>)> = lo
                .radii
                .par_iter()
                .map(|&r| (r, liouville_radius(&metric, &b, r, &config, &plan)))
                .collect();
            let mut extrema = Vec::new();
            for (r, s) in &samples {
                if let Ok(s) = s {
                    extrema.extend(s.extrema.iter().map(|e| extremum_row(Some(*r), e)));
                }
            }
            let rep = liouville_report(&metric, &b, samples).at("liouville report")?;
            all_failed(&rep.rows)?;
            write_rows(out, &rep.rows, Some(&rep.local_ratios))?;
            out.csv("extrema.csv", &["R", "t", "upper", "lower", "osc"], extrema)?;
            let mut report = Report::new(cfg, "experiment", &["liouville", "sweep"]);
            sweep_summary(&mut report, &rep.rows);
            report
                .section("liouville")
                .set("ansc_tail", rep.ansc)
                .set("regime", rep.regime.as_str())
                .maybe("decay_exponent", rep.decay_exponent)
                .floats("decay_factors", &rep.decay_factors)
                .set("c", rep.c)
                .set("composed_bound", rep.composed_bound.value)
                .set("composed_bound_overflow", rep.composed_bound.overflow)
                .set("max_gradient", rep.max_gradient)
                .set("gradient_within_bound", rep.gradient_within_bound)
                .maybe("empirical_C0", rep.empirical_c0)
                .set(
                    "data",
                    "bounded boundary data; linear-growth data on a finite ball is a scaled bounded problem",
                );
            out.text("report.toml", &report.render())?;
        }
        ExperimentKind::Harnack => {
            let record = holder_exponent(lo.harnack_c0).at("harnack constant")?;
            let from_solve = lo.harnack_samples.is_empty();
            let samples = if from_solve {
                let big_r = lo.harnack_radius;
                let (_, solved) = solve_radius(&metric, &b, big_r, &config, &plan).at("solve")?;
                let mut s = Vec::new();
                let mut t = 1.0;
                while t <= 0.5 * big_r {
                    s.push(ball_extrema(&solved.field, t));
                    t *= 2.0;
                }
                s
            } else {
                lo.harnack_samples.clone()
            };
            let record = record.with_samples(samples).at("oscillation samples")?;
            let pairs: Vec<[f64; 2]> = if lo.harnack_pairs.is_empty() {
                let first = record.samples.first().map(|s| s.t).unwrap_or(1.0);
                record.samples.iter().skip(1).map(|s| [first, s.t]).collect()
            } else {
                lo.harnack_pairs.clone()
            };
            let mut rows = Vec::with_capacity(pairs.len());
            let mut all_hold = true;
            for [r, big_r] in &pairs {
                let c = oscillation_decay_check(&record, *r, *big_r).at("decay check")?;
                all_hold &= c.holds;
                rows.push(vec![
                    num(*r),
                    num(*big_r),
                    num(c.lhs),
                    num(c.rhs),
                    c.chain_holds.to_string(),
                    opt(c.offending_dyad),
                    c.holds.to_string(),
                ]);
            }
            out.csv(
                "samples.csv",
                &["R", "t", "upper", "lower", "osc"],
                record.samples.iter().map(|e| extremum_row(None, e)),
            )?;
            out.csv(
                "harnack.csv",
                &["r", "R", "lhs", "rhs", "chain_holds", "offending_dyad", "holds"],
                rows,
            )?;
            let mut report = Report::new(cfg, "experiment", &["harnack", "oscillation-decay"]);
            report
                .section("harnack")
                .set("C0", record.c0)
                .set("lambda", record.lambda)
                .set("kappa_raw", record.kappa_raw)
                .set("kappa", record.kappa)
                .count("pairs", pairs.len())
                .set("all_hold", all_hold)
                .set("source", if from_solve { "solve" } else { "config" });
            out.text("report.toml", &report.render())?;
        }
    }
    Ok(())
}

fn extremum_row(radius: Option<f64>, e: &OscSample) -> Vec<String> {
    vec![opt(radius), num(e.t), num(e.upper), num(e.lower), num(e.osc())]
}

/// A sweep where nothing succeeded is a failure of the run.
fn all_failed(rows: &[ConvergenceRow]) -> Result<(), RunError> {
    if rows.iter().any(|r| r.solve.is_some()) {
        return Ok(());
    }
    let source = rows
        .iter()
        .find_map(|r| r.error.clone())
        .unwrap_or(CoreError::InvalidArgument("empty sweep"));
    Err(RunError::Core {
        stage: "radius sweep",
        source,
    })
}

fn write_rows(out: &OutDir, rows: &[ConvergenceRow], local: Option<&[Option<f64>]>) -> Result<(), RunError> {
    let header = [
        "R",
        "nr",
        "n_theta",
        "iterations",
        "residual",
        "osc",
        "pole_value",
        "sup_gradient",
        "min_u",
        "max_u",
        "successive_diff",
        "local_ratio",
        "error",
    ];
    let table = rows.iter().enumerate().map(|(k, row)| {
        let ratio = local.and_then(|l| l[k]);
        match &row.solve {
            Some(s) => vec![
                num(row.radius),
                s.nr.to_string(),
                s.n_theta.to_string(),
                s.iterations.to_string(),
                num(s.residual),
                num(s.osc),
                num(s.pole_value),
                num(s.sup_gradient),
                num(s.min_u),
                num(s.max_u),
                opt(row.successive_diff),
                opt(ratio),
                String::new(),
            ],
            None => {
                let mut v = vec![num(row.radius)];
                v.extend(std::iter::repeat_n(String::new(), 11));
                v.push(row.error.as_ref().map(|e| e.to_string()).unwrap_or_default());
                v
            }
        }
    });
    out.csv("convergence.csv", &header, table)?;

    let mut probe = Vec::new();
    for row in rows {
        if let Some(s) = &row.solve {
            for (k, u) in s.probe.iter().enumerate() {
                let r = (k / PROBE_ANGLES + 1) as f64 / PROBE_RADII as f64;
                let t = std::f64::consts::PI * (k % PROBE_ANGLES) as f64 / (PROBE_ANGLES - 1) as f64;
                probe.push(vec![num(row.radius), num(r), num(t), num(*u)]);
            }
        }
    }
    out.csv("probe.csv", &["R", "r", "theta", "u"], probe)?;
    Ok(())
}

fn sweep_summary(report: &mut Report, rows: &[ConvergenceRow]) {
    let ok: Vec<&RadiusSolve> = rows.iter().filter_map(|r| r.solve.as_ref()).collect();
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.successive_diff).collect();
    let mut s = report.section("sweep");
    s.count("radii", rows.len())
        .count("failed", rows.len() - ok.len())
        .floats("osc", &ok.iter().map(|s| s.osc).collect::<Vec<_>>())
        .floats("successive_diff", &diffs)
        .set("monotone_diffs", diffs.windows(2).all(|w| w[1] <= w[0]));
}
