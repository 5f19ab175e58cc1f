use std::sync::Arc;

use approx::assert_relative_eq;
use asymdir_core::barriers::{choose_k_and_r0, BarrierSearch};
use asymdir_core::boundary::BoundaryData;
use asymdir_core::grid::{build_grid, PolarGrid};
use asymdir_core::manifold::WarpedMetric;
use asymdir_core::solver::*;
use asymdir_core::{Equation, Error};

fn grid(metric: &WarpedMetric, r: f64, nr: usize, nt: usize) -> Arc<PolarGrid> {
    Arc::new(build_grid(metric, r, nr, nt).unwrap())
}

fn sup_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constant_data_is_reproduced_exactly() {
    let m = WarpedMetric::hyperbolic(1.0, 3).unwrap();
    let g = grid(&m, 3.0, 16, 16);
    let b = BoundaryData::constant(0.7, 3).unwrap();
    for eq in [
        Equation::Minimal,
        Equation::PLaplace { p: 3.0 },
        Equation::Harmonic,
    ] {
        let out = solve_dirichlet(&g, &SolverConfig::new(eq), &b).unwrap();
        assert!(out.field.values().iter().all(|&v| v == 0.7));
        assert_eq!(residual_norm(&out.field, eq, 0.0), 0.0);
    }
    // From a different start, one Picard step lands on the constant.
    let mut cfg = SolverConfig::new(Equation::Minimal);
    cfg.initial = InitialGuess::Constant(0.0);
    let out = solve_dirichlet(&g, &cfg, &b).unwrap();
    assert_eq!(out.iterations, 1);
    assert!(out.field.values().iter().all(|&v| (v - 0.7).abs() < 1e-12));
}

#[test]
fn small_minimal_graph_is_a_plane() {
    // u = 0.01 r cos θ is a tilted plane, an exact minimal graph in flat space.
    let m = WarpedMetric::euclidean(3).unwrap();
    let g = grid(&m, 1.0, 128, 64);
    let b = BoundaryData::scaled_cos(0.01, 3).unwrap();
    let out = solve_dirichlet(&g, &SolverConfig::new(Equation::Minimal), &b).unwrap();
    assert!(out.residual <= 1e-9);
    let err = out
        .field
        .points()
        .iter()
        .map(|p| (p.u - 0.01 * p.r * p.theta.cos()).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-5, "{err}");
}

#[test]
fn p_two_matches_harmonic() {
    let m = WarpedMetric::euclidean(3).unwrap();
    let g = grid(&m, 1.0, 48, 24);
    let b = BoundaryData::cos(3).unwrap();
    let mut cfg = SolverConfig::new(Equation::PLaplace { p: 2.0 });
    cfg.delta = 0.0;
    let p2 = solve_dirichlet(&g, &cfg, &b).unwrap();
    let h = solve_dirichlet(&g, &SolverConfig::new(Equation::Harmonic), &b).unwrap();
    assert!(sup_diff(&p2.field, &h.field) < 1e-8);
}

#[test]
fn oracle_residual_is_second_order() {
    let m = WarpedMetric::euclidean(3).unwrap();
    let mut prev: Option<f64> = None;
    for (nr, nt) in [(16, 8), (32, 16), (64, 32), (128, 64)] {
        let f = ScalarField::from_fn(grid(&m, 1.0, nr, nt), |r, t| 0.01 * r * t.cos());
        let res = residual_l2(&f, Equation::Minimal, 0.0);
        if let Some(p) = prev {
            let order = (p / res).log2();
            assert!(order >= 1.8, "order {order} at {nr}x{nt}");
        }
        prev = Some(res);
    }
    assert!(prev.unwrap() <= 1e-4);
}

#[test]
fn maximum_principle_and_reflection() {
    let m = WarpedMetric::march(0.75, 3).unwrap();
    let g = grid(&m, 6.0, 40, 24);
    let b = BoundaryData::cos(3).unwrap();
    let cfg = SolverConfig::new(Equation::Minimal);
    let out = solve_dirichlet(&g, &cfg, &b).unwrap();
    assert!(out.field.min() >= -1.0 - 1e-8 && out.field.max() <= 1.0 + 1e-8);
    let refl = solve_dirichlet(&g, &cfg, &b.reflected()).unwrap();
    let nt = g.n_theta();
    for i in 0..g.nr() {
        for j in 0..nt {
            let d = (out.field.at(i, j) - refl.field.at(i, nt - 1 - j)).abs();
            assert!(d < 10.0 * cfg.tol, "{d:e}");
        }
    }
}

#[test]
fn uniqueness_probe() {
    let m = WarpedMetric::hyperbolic(1.0, 3).unwrap();
    let g = grid(&m, 3.0, 32, 16);
    let b = BoundaryData::scaled_cos(0.5, 3).unwrap();
    let mut lo = SolverConfig::new(Equation::Minimal);
    lo.initial = InitialGuess::Constant(-0.5);
    let mut hi = lo;
    hi.initial = InitialGuess::Constant(0.5);
    let a = solve_dirichlet(&g, &lo, &b).unwrap();
    let c = solve_dirichlet(&g, &hi, &b).unwrap();
    // The residual bound translates into a much smaller error in u.
    assert!(sup_diff(&a.field, &c.field) < 10.0 * lo.tol);
}

#[test]
fn newton_agrees_with_picard() {
    let m = WarpedMetric::euclidean(4).unwrap();
    let g = grid(&m, 2.0, 24, 12);
    let b = BoundaryData::cos(4).unwrap();
    for eq in [Equation::Minimal, Equation::PLaplace { p: 3.0 }] {
        let mut cfg = SolverConfig::new(eq);
        let pic = solve_dirichlet(&g, &cfg, &b).unwrap();
        cfg.iteration = Iteration::DampedNewton;
        let newt = solve_dirichlet(&g, &cfg, &b).unwrap();
        assert!(newt.iterations < pic.iterations);
        assert!(sup_diff(&pic.field, &newt.field) < 1e-8, "{eq:?}");
    }
}

#[test]
fn config_validation() {
    let mut cfg = SolverConfig::new(Equation::PLaplace { p: 3.0 });
    assert_eq!(cfg.delta, DEFAULT_DELTA);
    cfg.delta = 0.0;
    assert!(cfg.validate().is_err());
    let mut cfg = SolverConfig::new(Equation::Minimal);
    assert_eq!(cfg.delta, 0.0);
    assert!(cfg.validate().is_ok());
    cfg.tol = 0.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn iteration_cap_reports_residual() {
    let m = WarpedMetric::euclidean(3).unwrap();
    let g = grid(&m, 2.0, 16, 8);
    let b = BoundaryData::cos(3).unwrap();
    let mut cfg = SolverConfig::new(Equation::Minimal);
    cfg.max_iter = 1;
    match solve_dirichlet(&g, &cfg, &b) {
        Err(Error::NoConvergence { iterations, residual }) => {
            assert_eq!(iterations, 1);
            assert!(residual > cfg.tol);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn field_derived_quantities() {
    let m = WarpedMetric::euclidean(3).unwrap();
    let g = grid(&m, 1.0, 16, 16);
    let f = ScalarField::from_fn(g.clone(), |r, t| r * t.cos());
    for p in f.points() {
        assert!(p.w >= 1.0 && p.sigma > 0.0 && p.sigma <= 1.0);
    }
    // Interior gradient of the linear field x₃ has unit length.
    assert_relative_eq!(f.grad_norm(8, 5), 1.0, max_relative = 1e-2);
    assert_relative_eq!(f.sample(0.5, 0.0), 0.5, max_relative = 1e-3);
}

#[test]
fn sandwich_trivial_and_negative_control() {
    let m = WarpedMetric::hyperbolic(1.0, 3).unwrap();
    let zero = BoundaryData::constant(0.0, 3).unwrap();
    let bar = choose_k_and_r0(&m, Equation::Minimal, &zero, BarrierSearch::default()).unwrap();
    let g = grid(&m, 3.0, 24, 12);
    let out = solve_dirichlet(&g, &SolverConfig::new(Equation::Minimal), &zero).unwrap();
    assert!(sandwich_check(&out.field, &bar, 1e-8).unwrap().holds());

    let b = BoundaryData::scaled_cos(0.1, 3).unwrap();
    let bar = choose_k_and_r0(&m, Equation::Minimal, &b, BarrierSearch::default()).unwrap();
    let out = solve_dirichlet(&g, &SolverConfig::new(Equation::Minimal), &b).unwrap();
    let rep = sandwich_check(&out.field, &bar, 1e-8).unwrap();
    assert!(rep.holds(), "{:?}", rep.violations.first());
    let shift = 2.0 * bar.certificate.a.abs();
    let bad = out.field.map(|v| v + shift);
    let rep = sandwich_check(&bad, &bar, 1e-8).unwrap();
    let last = g.nr() - 1;
    for j in 0..g.n_theta() {
        assert!(rep.violations.iter().any(|v| v.i == last && v.j == j));
    }
}

#[test]
fn convergence_sweep_with_constant_data() {
    let m = WarpedMetric::euclidean(3).unwrap();
    let b = BoundaryData::constant(0.3, 3).unwrap();
    let rows = boundary_convergence_experiment(
        &m,
        &b,
        &[2.0, 4.0, 8.0],
        &SolverConfig::new(Equation::Minimal),
        &GridPlan::default(),
    )
    .unwrap();
    for row in &rows {
        let s = row.solve.as_ref().unwrap();
        assert_eq!(s.osc, 0.0);
        assert_eq!(s.sup_gradient, 0.0);
    }
    assert_eq!(rows[2].successive_diff, Some(0.0));
    assert!(boundary_convergence_experiment(
        &m,
        &b,
        &[4.0, 2.0],
        &SolverConfig::new(Equation::Minimal),
        &GridPlan::default()
    )
    .is_err());
}

#[test]
fn sweep_records_failures_and_continues() {
    let m = WarpedMetric::euclidean(3).unwrap();
    let b = BoundaryData::cos(3).unwrap();
    let mut cfg = SolverConfig::new(Equation::Minimal);
    cfg.max_iter = 3;
    let rows = boundary_convergence_experiment(&m, &b, &[2.0, 64.0], &cfg, &GridPlan::default()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().any(|r| r.error.is_some()) || rows.iter().all(|r| r.solve.is_some()));
}
