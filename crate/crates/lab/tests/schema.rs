//! Every parameter of every core operation is reachable from the run config:
//! changing the key changes the lowered core arguments. The reverse direction
//! is audited too, so a new config key without an entry here fails.

use std::collections::BTreeSet;

use asymdir::RunConfig;
use toml::{Table, Value};

const SHARED: &str = r#"
command = "solve"

[grid]
R_max = 4.0
nr = 32
n_theta = 16
stretch_ratio = 1.01

[solver]
iteration = "picard"
tol = 1e-9
max_iter = 200
delta = 1e-8
relaxation = 0.7
shrink = 0.5
min_step = 0.015625
initial_value = 0.1
sandwich = true
sandwich_tol = 1e-6

[criteria]
horizon = 1e6
tail_rtol = 1e-2
j_forms = ["nested"]
p = [2.5]
p_form = "nested"
parabolicity_p = [2.0]
tol_convex = 1e-8

[criteria.scan]
family = "march"
criterion = "p-integral"
p = 2.5
lo = 0.3
hi = 0.8
tol = 0.01
R_max = 1e6

[barrier]
R_max = 1e3
nr = 200
n_theta = 64
max_doublings = 40
k = 2.0

[experiment]
kind = "liouville"
radii = [4.0, 8.0]
n_theta = 32
first_width = 0.05
max_ratio = 1.05

[experiment.harnack]
C0 = 4.0
samples = [[1.0, 0.1, -0.1], [2.0, 0.2, -0.2]]
solve_R = 32.0
pairs = [[1.0, 2.0]]

[output]
dir = "out"
"#;

fn value(text: &str) -> Value {
    let t: Table = format!("v = {text}").parse().unwrap();
    t["v"].clone()
}

fn set(t: &mut Table, path: &str, v: Option<Value>) {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().unwrap();
    let mut cur = t;
    for p in parts {
        cur = cur
            .get_mut(p)
            .and_then(Value::as_table_mut)
            .unwrap_or_else(|| panic!("{path}"));
    }
    match v {
        Some(v) => {
            cur.insert(last.into(), v);
        }
        None => {
            cur.remove(last);
        }
    }
}

fn base(name: &str) -> Table {
    let mut t: Table = SHARED.parse().unwrap();
    let march = "{ kind = \"march\", n = 3, c = 0.75, search = { ratio = 1.05, a_max = 1e3 } }";
    let curvature = "{ kind = \"curvature\", n = 3, onset = 3.0, inner = -0.1, R_max = 100.0, \
                     tail = { law = \"ansc\", c = 0.5, eps = 0.5 }, \
                     ode = { rtol = 1e-12, atol = 1e-14, h_init = 1e-4, h_min = 1e-14, max_rel = 0.05 } }";
    set(&mut t, "metric", Some(value(march)));
    set(
        &mut t,
        "equation",
        Some(value("{ kind = \"p-laplace\", p = 2.5 }")),
    );
    set(
        &mut t,
        "boundary",
        Some(value("{ kind = \"scaled-cos\", eps = 0.1 }")),
    );
    match name {
        "march" => {}
        "curvature" => set(&mut t, "metric", Some(value(curvature))),
        "power-log" => {
            set(&mut t, "metric", Some(value(curvature)));
            set(
                &mut t,
                "metric.tail",
                Some(value("{ law = \"power-log\", c = 1.0 }")),
            );
        }
        "constant-tail" => {
            set(&mut t, "metric", Some(value(curvature)));
            set(
                &mut t,
                "metric.tail",
                Some(value("{ law = \"constant\", k0 = 1.0 }")),
            );
        }
        "hyperbolic" => {
            set(
                &mut t,
                "metric",
                Some(value("{ kind = \"hyperbolic\", n = 3, kappa = 1.0 }")),
            );
            set(
                &mut t,
                "boundary",
                Some(value("{ kind = \"constant\", value = 0.7 }")),
            );
        }
        "first-width" => {
            set(&mut t, "grid.stretch_ratio", None);
            set(&mut t, "grid.first_width", Some(value("0.1")));
        }
        other => panic!("unknown base {other}"),
    }
    t
}

fn lowered(t: &Table) -> String {
    let cfg: RunConfig = Value::Table(t.clone()).try_into().unwrap();
    format!("{:?}", cfg.lower().unwrap())
}

/// (operation, parameter, base, key, replacement). The key is replaced in the
/// base document; a replacement of `-` removes it.
const AUDIT: &[(&str, &str, &str, &str, &str)] = &[
    ("WarpedMetric::march_with", "n", "march", "metric.n", "4"),
    ("WarpedMetric::march_with", "c", "march", "metric.c", "0.6"),
    (
        "WarpedMetric::march_with",
        "search.ratio",
        "march",
        "metric.search.ratio",
        "1.1",
    ),
    (
        "WarpedMetric::march_with",
        "search.a_max",
        "march",
        "metric.search.a_max",
        "50.0",
    ),
    (
        "WarpedMetric::closed_form",
        "kind",
        "march",
        "metric",
        "{ kind = \"euclidean\", n = 3 }",
    ),
    (
        "WarpedMetric::hyperbolic",
        "kappa",
        "hyperbolic",
        "metric.kappa",
        "2.0",
    ),
    (
        "WarpedMetric::from_curvature_with",
        "n",
        "curvature",
        "metric.n",
        "4",
    ),
    (
        "WarpedMetric::from_curvature_with",
        "r_max",
        "curvature",
        "metric.R_max",
        "50.0",
    ),
    (
        "WarpedMetric::from_curvature_with",
        "ctl.rtol",
        "curvature",
        "metric.ode.rtol",
        "1e-10",
    ),
    (
        "WarpedMetric::from_curvature_with",
        "ctl.atol",
        "curvature",
        "metric.ode.atol",
        "1e-12",
    ),
    (
        "WarpedMetric::from_curvature_with",
        "ctl.h_init",
        "curvature",
        "metric.ode.h_init",
        "1e-3",
    ),
    (
        "WarpedMetric::from_curvature_with",
        "ctl.h_min",
        "curvature",
        "metric.ode.h_min",
        "1e-12",
    ),
    (
        "WarpedMetric::from_curvature_with",
        "ctl.max_rel",
        "curvature",
        "metric.ode.max_rel",
        "0.1",
    ),
    (
        "CurvatureProfile::new",
        "onset",
        "curvature",
        "metric.onset",
        "4.0",
    ),
    (
        "CurvatureProfile::new",
        "tail",
        "curvature",
        "metric.tail",
        "{ law = \"power-log\", c = 0.5 }",
    ),
    (
        "CurvatureProfile::new",
        "tail.c",
        "curvature",
        "metric.tail.c",
        "0.7",
    ),
    (
        "CurvatureProfile::new",
        "tail.eps",
        "curvature",
        "metric.tail.eps",
        "0.2",
    ),
    (
        "CurvatureProfile::new",
        "tail.c",
        "power-log",
        "metric.tail.c",
        "2.0",
    ),
    (
        "CurvatureProfile::new",
        "tail.k0",
        "constant-tail",
        "metric.tail.k0",
        "2.0",
    ),
    (
        "CurvatureProfile::with_inner",
        "inner",
        "curvature",
        "metric.inner",
        "-0.2",
    ),
    (
        "WarpedMetric::is_convex",
        "tol",
        "march",
        "criteria.tol_convex",
        "1e-6",
    ),
    (
        "j_integral_with",
        "form",
        "march",
        "criteria.j_forms",
        "[\"swapped\"]",
    ),
    (
        "j_integral_with",
        "opts.horizon",
        "march",
        "criteria.horizon",
        "1e5",
    ),
    (
        "j_integral_with",
        "opts.tail_rtol",
        "march",
        "criteria.tail_rtol",
        "1e-3",
    ),
    ("p_integral_with", "p", "march", "criteria.p", "[2.2]"),
    (
        "p_integral_with",
        "form",
        "march",
        "criteria.p_form",
        "\"swapped\"",
    ),
    (
        "parabolicity_check_with",
        "p",
        "march",
        "criteria.parabolicity_p",
        "[3.0]",
    ),
    (
        "threshold_scan",
        "family",
        "march",
        "criteria.scan.family",
        "\"power-log\"",
    ),
    (
        "threshold_scan",
        "criterion",
        "march",
        "criteria.scan",
        "{ family = \"march\", criterion = \"j\", lo = 0.3, hi = 0.8, tol = 0.01 }",
    ),
    ("threshold_scan", "criterion.p", "march", "criteria.scan.p", "2.2"),
    ("threshold_scan", "range.lo", "march", "criteria.scan.lo", "0.2"),
    ("threshold_scan", "range.hi", "march", "criteria.scan.hi", "0.9"),
    (
        "threshold_scan",
        "tolerance",
        "march",
        "criteria.scan.tol",
        "0.001",
    ),
    (
        "threshold_scan",
        "family r_max",
        "march",
        "criteria.scan.R_max",
        "1e5",
    ),
    (
        "BoundaryData::preset",
        "preset",
        "march",
        "boundary",
        "{ kind = \"cos\" }",
    ),
    ("BoundaryData::preset", "eps", "march", "boundary.eps", "0.2"),
    (
        "BoundaryData::preset",
        "value",
        "hyperbolic",
        "boundary.value",
        "0.5",
    ),
    (
        "SolverConfig",
        "equation",
        "march",
        "equation",
        "{ kind = \"minimal\" }",
    ),
    (
        "SolverConfig",
        "equation",
        "march",
        "equation",
        "{ kind = \"harmonic\" }",
    ),
    ("SolverConfig", "p", "march", "equation.p", "3.0"),
    (
        "SolverConfig",
        "iteration",
        "march",
        "solver.iteration",
        "\"damped-newton\"",
    ),
    ("SolverConfig", "tol", "march", "solver.tol", "1e-8"),
    ("SolverConfig", "max_iter", "march", "solver.max_iter", "20"),
    ("SolverConfig", "delta", "march", "solver.delta", "1e-6"),
    (
        "SolverConfig",
        "damping.relaxation",
        "march",
        "solver.relaxation",
        "0.5",
    ),
    ("SolverConfig", "damping.shrink", "march", "solver.shrink", "0.25"),
    (
        "SolverConfig",
        "damping.min_step",
        "march",
        "solver.min_step",
        "0.125",
    ),
    ("SolverConfig", "initial", "march", "solver.initial_value", "0.3"),
    ("sandwich_check", "enabled", "march", "solver.sandwich", "false"),
    ("sandwich_check", "tol", "march", "solver.sandwich_tol", "1e-4"),
    ("build_grid_with", "r_max", "march", "grid.R_max", "8.0"),
    ("build_grid_with", "nr", "march", "grid.nr", "64"),
    ("build_grid_with", "n_theta", "march", "grid.n_theta", "32"),
    (
        "build_grid_with",
        "stretch",
        "march",
        "grid.stretch_ratio",
        "1.02",
    ),
    (
        "build_grid_with",
        "stretch",
        "first-width",
        "grid.first_width",
        "0.05",
    ),
    (
        "choose_k_and_r0",
        "search.r_max",
        "march",
        "barrier.R_max",
        "500.0",
    ),
    ("choose_k_and_r0", "search.nr", "march", "barrier.nr", "100"),
    (
        "choose_k_and_r0",
        "search.n_theta",
        "march",
        "barrier.n_theta",
        "32",
    ),
    (
        "choose_k_and_r0",
        "search.max_doublings",
        "march",
        "barrier.max_doublings",
        "10",
    ),
    ("barrier_profile", "k", "march", "barrier.k", "4.0"),
    (
        "run",
        "experiment kind",
        "march",
        "experiment.kind",
        "\"harnack\"",
    ),
    (
        "liouville_experiment",
        "radii",
        "march",
        "experiment.radii",
        "[4.0, 16.0]",
    ),
    ("GridPlan", "n_theta", "march", "experiment.n_theta", "16"),
    (
        "GridPlan",
        "first_width",
        "march",
        "experiment.first_width",
        "0.1",
    ),
    ("GridPlan", "max_ratio", "march", "experiment.max_ratio", "1.1"),
    ("holder_exponent", "c0", "march", "experiment.harnack.C0", "3.0"),
    (
        "HarnackRecord::with_samples",
        "samples",
        "march",
        "experiment.harnack.samples",
        "[]",
    ),
    (
        "oscillation_decay_check",
        "r, R",
        "march",
        "experiment.harnack.pairs",
        "[]",
    ),
    (
        "solve_radius",
        "radius",
        "march",
        "experiment.harnack.solve_R",
        "16.0",
    ),
];

/// Keys that select behaviour outside the core.
const DRIVER_KEYS: &[&str] = &["command", "output.dir"];

#[test]
fn every_operation_parameter_is_reachable() {
    for &(op, param, name, key, new) in AUDIT {
        let b = base(name);
        let before = lowered(&b);
        let mut t = b.clone();
        set(&mut t, key, if new == "-" { None } else { Some(value(new)) });
        let after = lowered(&t);
        assert_ne!(before, after, "{op}({param}) not reachable via `{key}`");
    }
}

fn leaves(prefix: &str, t: &Table, out: &mut BTreeSet<String>) {
    for (k, v) in t {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(sub) => leaves(&path, sub, out),
            _ => {
                out.insert(path);
            }
        }
    }
}

#[test]
fn every_config_key_is_audited() {
    let mut all = BTreeSet::new();
    for name in [
        "march",
        "curvature",
        "power-log",
        "constant-tail",
        "hyperbolic",
        "first-width",
    ] {
        let cfg: RunConfig = Value::Table(base(name)).try_into().unwrap();
        // Round trip through the serializer so defaulted keys show up as well.
        let t: Table = cfg.canonical().parse().unwrap();
        leaves("", &t, &mut all);
    }
    let mut covered: BTreeSet<String> = DRIVER_KEYS.iter().map(|s| s.to_string()).collect();
    for &(_, _, _, key, new) in AUDIT {
        covered.insert(key.to_string());
        // A whole-table replacement covers the keys it sets.
        if let Value::Table(t) = value(new) {
            leaves(key, &t, &mut covered);
        }
    }
    let missing: Vec<&String> = all.iter().filter(|k| !covered.contains(*k)).collect();
    assert!(
        missing.is_empty(),
        "config keys without an audit entry: {missing:?}"
    );
}

#[test]
fn full_configs_roundtrip() {
    for name in [
        "march",
        "curvature",
        "power-log",
        "constant-tail",
        "hyperbolic",
        "first-width",
    ] {
        let cfg: RunConfig = Value::Table(base(name)).try_into().unwrap();
        let back = RunConfig::from_toml(&cfg.canonical()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let mut t = base("march");
    set(&mut t, "solver.tolerance", Some(value("1e-9")));
    let r: Result<RunConfig, _> = Value::Table(t).try_into();
    assert!(r.is_err());
    let mut t = base("march");
    set(
        &mut t,
        "equation",
        Some(value("{ kind = \"harmonic\", p = 3.0 }")),
    );
    let r: Result<RunConfig, _> = Value::Table(t).try_into();
    assert!(r.is_err());
    let mut t = base("march");
    set(&mut t, "metric.kappa", Some(value("1.0")));
    let r: Result<RunConfig, _> = Value::Table(t).try_into();
    assert!(r.is_err());
}
