use std::sync::Arc;

use approx::assert_relative_eq;
use asymdir_core::boundary::BoundaryData;
use asymdir_core::experiments::*;
use asymdir_core::grid::build_grid;
use asymdir_core::manifold::{CurvatureProfile, TailLaw, WarpedMetric};
use asymdir_core::solver::{GridPlan, ScalarField, SolverConfig};
use asymdir_core::{Equation, Error};
use proptest::prelude::*;

fn dyadic(osc: impl Fn(f64) -> f64, count: usize) -> Vec<OscSample> {
    (0..count)
        .map(|k| {
            let t = 2f64.powi(k as i32);
            let o = osc(t);
            OscSample {
                t,
                upper: 0.5 * o,
                lower: -0.5 * o,
            }
        })
        .collect()
}

#[test]
fn kappa_examples() {
    let r = holder_exponent(2.0).unwrap();
    assert_eq!(r.lambda, 0.5);
    assert_eq!(r.kappa, 1.0);
    let r = holder_exponent(4.0).unwrap();
    assert_eq!(r.lambda, 0.75);
    // -log2(3/4) = 2 - log2 3.
    assert_relative_eq!(r.kappa, 2.0 - 3f64.log2(), epsilon = 1e-15);
    assert_relative_eq!(r.kappa, 0.41504, epsilon = 1e-5);
    let r = holder_exponent(1e6).unwrap();
    assert_relative_eq!(r.kappa, -(1.0 - 1e-6f64).ln() / 2f64.ln(), max_relative = 1e-9);
    assert!(r.kappa > 0.0 && r.kappa < 2e-6);
    // Raw value exceeds one below C0 = 2 and is clamped.
    let r = holder_exponent(1.5).unwrap();
    assert_relative_eq!(r.kappa_raw, 3f64.log2(), epsilon = 1e-15);
    assert_eq!(r.kappa, 1.0);
    assert!(holder_exponent(1.0).is_err());
    assert!(holder_exponent(0.5).is_err());
}

#[test]
fn constant_samples_pass() {
    let rec = holder_exponent(3.0)
        .unwrap()
        .with_samples(dyadic(|_| 0.0, 6))
        .unwrap();
    assert!(oscillation_decay_check(&rec, 1.0, 32.0).unwrap().holds);
}

#[test]
fn power_samples_are_the_equality_case() {
    let rec = holder_exponent(4.0).unwrap();
    let kappa = rec.kappa;
    let rec = rec.with_samples(dyadic(|t| t.powf(kappa), 10)).unwrap();
    for i in 0..10 {
        for k in i..10 {
            let (r, big) = (2f64.powi(i), 2f64.powi(k));
            let c = oscillation_decay_check(&rec, r, big).unwrap();
            assert!(c.holds, "{r} {big} {c:?}");
        }
    }
}

#[test]
fn single_dyad_violation_is_reported() {
    let rec = holder_exponent(4.0).unwrap();
    let kappa = rec.kappa;
    // Flatten the oscillation between t = 8 and t = 16.
    let samples = dyadic(
        |t| {
            if t >= 16.0 {
                (t / 2.0).powf(kappa)
            } else {
                t.powf(kappa)
            }
        },
        8,
    );
    let rec = rec.with_samples(samples).unwrap();
    let c = oscillation_decay_check(&rec, 1.0, 64.0).unwrap();
    assert!(!c.holds);
    assert_eq!(c.offending_dyad, Some(8.0));
    assert!(matches!(
        oscillation_decay_check(&rec, 3.0, 64.0),
        Err(Error::MissingSample { .. })
    ));
}

#[test]
fn malformed_samples_are_rejected() {
    let rec = holder_exponent(4.0).unwrap();
    let mut s = dyadic(|t| t, 4);
    s[2].t = 5.0;
    assert!(rec.clone().with_samples(s).is_err());
    let s = dyadic(|t| 1.0 / t, 4);
    assert!(rec.with_samples(s).is_err());
}

proptest! {
    #[test]
    fn chain_replays_single_steps(c0 in 1.01f64..50.0, base in 0.01f64..10.0, ratios in proptest::collection::vec(0.0f64..=1.0, 9)) {
        // Build osc(t_k) with osc(t_k) <= Λ osc(t_{k+1}) at every dyad.
        let rec = holder_exponent(c0).unwrap();
        let lambda = rec.lambda;
        let mut osc = vec![base];
        for q in &ratios {
            let prev = *osc.last().unwrap();
            osc.push(prev / lambda * (1.0 + q));
        }
        let samples: Vec<OscSample> = osc.iter().enumerate().map(|(k, &o)| OscSample { t: 2f64.powi(k as i32), upper: o, lower: 0.0 }).collect();
        let rec = rec.with_samples(samples).unwrap();
        for i in 0..osc.len() {
            for k in i..osc.len() {
                let c = oscillation_decay_check(&rec, 2f64.powi(i as i32), 2f64.powi(k as i32)).unwrap();
                prop_assert!(c.holds);
            }
        }
    }

    #[test]
    fn kappa_strictly_decreasing(a in 1.001f64..1e4, d in 1e-3f64..1e3) {
        let lo = holder_exponent(a).unwrap();
        let hi = holder_exponent(a + d).unwrap();
        prop_assert!(hi.kappa_raw < lo.kappa_raw);
        prop_assert!(lo.kappa > 0.0 && lo.kappa <= 1.0 && lo.lambda > 0.0 && lo.lambda < 1.0);
    }

    #[test]
    fn sigma_in_unit_interval(amp in -5.0f64..5.0, k in 1u32..4) {
        let m = WarpedMetric::euclidean(3).unwrap();
        let g = Arc::new(build_grid(&m, 2.0, 8, 8).unwrap());
        let f = ScalarField::from_fn(g, |r, t| amp * r.powi(k as i32) * t.cos());
        let w = weight_field(&f);
        prop_assert!(w.sigma.iter().all(|&s| s > 0.0 && s <= 1.0));
        prop_assert!(w.meets_lower);
    }
}

#[test]
fn weight_examples() {
    let m = WarpedMetric::euclidean(3).unwrap();
    let g = Arc::new(build_grid(&m, 2.0, 16, 16).unwrap());
    let w = weight_field(&ScalarField::from_fn(g.clone(), |_, _| 0.4));
    assert!(w.sigma.iter().all(|&s| s == 1.0));
    // u = r cos θ = x₃ has |∇u| = 1; one-sided differences at the origin row are exact too.
    let w = weight_field(&ScalarField::from_fn(g, |r, t| r * t.cos()));
    let target = 2f64.powf(-0.25);
    assert_relative_eq!(target, 0.84090, epsilon = 1e-5);
    let worst = w.sigma.iter().map(|s| (s - target).abs()).fold(0.0, f64::max);
    assert!(worst < 5e-3, "{worst}");
}

#[test]
fn liouville_constant_data() {
    let m = WarpedMetric::euclidean(3).unwrap();
    let b = BoundaryData::constant(0.2, 3).unwrap();
    let rep = liouville_experiment(
        &m,
        &b,
        &[4.0, 8.0, 16.0],
        &SolverConfig::new(Equation::Minimal),
        &GridPlan::default(),
    )
    .unwrap();
    assert_eq!(rep.regime, Regime::Constant);
    assert_eq!(rep.max_gradient, 0.0);
    assert!(rep.gradient_within_bound);
    assert!(rep.rows.iter().all(|r| r.solve.as_ref().unwrap().osc == 0.0));
}

#[test]
fn euclidean_oscillation_decays() {
    let m = WarpedMetric::euclidean(3).unwrap();
    let b = BoundaryData::cos(3).unwrap();
    let rep = liouville_experiment(
        &m,
        &b,
        &[4.0, 8.0, 16.0, 32.0],
        &SolverConfig::new(Equation::Minimal),
        &GridPlan::default(),
    )
    .unwrap();
    assert!(rep.ansc);
    assert!(
        rep.decay_factors.iter().all(|&f| f >= 1.5),
        "{:?}",
        rep.decay_factors
    );
    assert_eq!(rep.regime, Regime::Decaying);
    assert!(rep.gradient_within_bound);
    assert!(rep.local_ratios.iter().all(|r| r.unwrap() <= 1.0));
}

#[test]
fn march_control_stabilizes() {
    let m = WarpedMetric::march(0.75, 3).unwrap();
    let b = BoundaryData::cos(3).unwrap();
    let rep = liouville_experiment(
        &m,
        &b,
        &[64.0, 128.0, 256.0, 512.0],
        &SolverConfig::new(Equation::Minimal),
        &GridPlan::default(),
    )
    .unwrap();
    assert!(!rep.ansc);
    assert_eq!(rep.regime, Regime::Stabilizing);
    let diffs: Vec<f64> = rep.rows.iter().filter_map(|r| r.successive_diff).collect();
    assert!(diffs.windows(2).all(|w| w[1] < w[0]));
    assert!(rep.rows.last().unwrap().solve.as_ref().unwrap().osc > 0.05);
}

#[test]
fn ansc_tail_oscillation_decreases() {
    let p = CurvatureProfile::new(TailLaw::Ansc { c: 1.0, eps: 0.5 }, 3.0).unwrap();
    let m = WarpedMetric::from_curvature(p, 3, 200.0).unwrap();
    let b = BoundaryData::cos(3).unwrap();
    let rep = liouville_experiment(
        &m,
        &b,
        &[4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
        &SolverConfig::new(Equation::Minimal),
        &GridPlan::default(),
    )
    .unwrap();
    assert!(rep.ansc);
    let osc: Vec<f64> = rep.rows.iter().map(|r| r.solve.as_ref().unwrap().osc).collect();
    assert!(osc.windows(2).all(|w| w[1] < w[0]), "{osc:?}");
}
