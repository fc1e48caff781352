use std::f64::consts::PI;
use std::sync::Arc;

use sml_core::discretization::Grid;
use sml_core::exponents::build_exponents;
use sml_core::flow::{flow_step, functional_f, run_flow, FlowOptions};
use sml_core::manifold::{make_revolution, make_sphere, AnalyticProfile};
use sml_core::random;
use sml_core::rigidity::{bisect_lambda, interpolation_defect, lambda_star_quotient, lambda_star_upper_bound, rigidity_scan, RigidityRecord};

fn sphere(n: usize) -> Arc<Grid> {
    Arc::new(Grid::new(Arc::new(make_sphere(2).unwrap()), n).unwrap())
}

#[test]
fn rigidity_dichotomy_on_the_sphere() {
    let g = sphere(400);
    for q in [3.0, 4.0] {
        let e = build_exponents(2, q).unwrap();
        let below = rigidity_scan(&g, &e, 0.95 * 2.0, 50, 5, None).unwrap();
        assert!(below.only_constants(), "q = {q}");
        assert_eq!(below.solutions_found.len(), 1);
        assert_eq!(below.solutions_found[0].residual, 0.0);
        let above = rigidity_scan(&g, &e, 1.05 * 2.0, 50, 5, None).unwrap();
        let s = above.nonconstant().next().expect("bifurcated branch");
        assert!(s.residual <= 1e-9 && s.solution.is_positive());
    }
}

#[test]
fn bisected_threshold_admits_the_interpolation_inequality() {
    let g = sphere(400);
    let e = build_exponents(2, 4.0).unwrap();
    let (lo, hi) = bisect_lambda(&g, &e, 1.8, 2.2, 0.01, 24, 1).unwrap();
    assert!(lo >= 1.98 && hi <= 2.02, "[{lo}, {hi}]");
    let mut rng = random::rng(9);
    for _ in 0..30 {
        let v = g.function(random::random_positive(&mut rng, &g, 8)).unwrap();
        let scale = g.dirichlet(&v.values) + g.inner(&v.values, &v.values);
        assert!(interpolation_defect(&v, &e, lo) >= -1e-7 * scale);
    }
}

#[test]
fn report_serializes() {
    let g = sphere(100);
    let e = build_exponents(2, 4.0).unwrap();
    let r = rigidity_scan(&g, &e, 2.2, 8, 0, None).unwrap();
    let rec = r.record(g.manifold().descriptor(), &e, 0);
    let mut buf = Vec::new();
    rec.write_json(&mut buf).unwrap();
    let back: RigidityRecord = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, rec);
    assert_eq!(back.schema_version, 1);
}

#[test]
fn flow_below_threshold_converges_monotonically() {
    let g = sphere(400);
    let e = build_exponents(2, 3.0).unwrap();
    let mut rng = random::rng(21);
    for _ in 0..5 {
        let u0 = g.function(random::random_positive(&mut rng, &g, 8)).unwrap();
        let trace = run_flow(&u0, &e, 1.5, 1e3, FlowOptions::default()).unwrap();
        assert!(trace.worst_increase(1e-9) <= 0.0);
        assert!(*trace.sup_distance.last().unwrap() < 1e-10);
        assert!(trace.f_values[0] > 0.0);
    }
}

#[test]
fn backtracking_engages_on_rough_data() {
    let g = sphere(200);
    let e = build_exponents(2, 4.0).unwrap();
    let u = g.from_fn(|s| 1.0 + 0.9 * (9.0 * s).cos());
    let (next, taken) = flow_step(&u, &e, 1e3).unwrap();
    assert!(taken < 1e3 && taken > 0.0);
    assert!(next.is_positive());
}

#[test]
fn functional_is_positive_on_a_perturbation() {
    let g = sphere(400);
    let e = build_exponents(2, 3.0).unwrap();
    assert!(functional_f(&g.from_fn(|s| 1.0 + 0.2 * s.cos()), &e, 2.0).unwrap() > 0.0);
    assert_eq!(functional_f(&g.constant(1.0), &e, 2.0).unwrap().abs() < 1e-12, true);
}

#[test]
fn lambda_star_ordering_on_revolutions() {
    for a in [0.1, 0.3] {
        let m = Arc::new(make_revolution(Arc::new(AnalyticProfile::bumpy_sphere(a)), PI).unwrap());
        let g = Arc::new(Grid::new(m.clone(), 800).unwrap());
        for q in [3.0, 4.0] {
            let e = build_exponents(2, q).unwrap();
            let bound = lambda_star_upper_bound(&g, &e, 60, 2).unwrap();
            assert!(bound.value <= m.lambda_one + 1e-6, "a = {a}, q = {q}: {} > {}", bound.value, m.lambda_one);
            // a finite-amplitude harmonic gives a value above the bound
            let u = g.from_fn(|s| 1.0 + 0.3 * s.cos());
            assert!(lambda_star_quotient(&e, &u).unwrap() >= bound.value);
        }
    }
}
