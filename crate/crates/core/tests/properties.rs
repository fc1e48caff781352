use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use sml_core::discretization::Grid;
use sml_core::exponents::{build_exponents, critical_exponent, Regime};
use sml_core::flow::{functional_f, run_flow, FlowOptions};
use sml_core::manifold::{make_revolution, make_sphere, AnalyticProfile};
use sml_core::random;
use sml_core::rigidity::{interpolation_defect, q_tensor_samples};
use sml_core::schrodinger::{holder_gap, optimal_potential_from_minimizer};

fn sphere(n: usize) -> Arc<Grid> {
    Arc::new(Grid::new(Arc::new(make_sphere(2).unwrap()), n).unwrap())
}

fn bumpy(a: f64, n: usize) -> Arc<Grid> {
    let m = make_revolution(Arc::new(AnalyticProfile::bumpy_sphere(a)), PI).unwrap();
    Arc::new(Grid::new(Arc::new(m), n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn holder_conjugates(d in 1usize..=4, t in 0.01f64..0.99) {
        let top = critical_exponent(d).min(12.0);
        for q in [1.0 + t, 2.0 + t * (top - 2.0)] {
            let e = build_exponents(d, q).unwrap();
            let recip = match e.regime {
                Regime::SubcriticalAbove2 => 1.0 - 2.0 / q,
                Regime::Below2 => 2.0 / q - 1.0,
            };
            prop_assert!((1.0 / e.p_holder - recip).abs() < 1e-12);
            prop_assert!((e.vartheta - d as f64 * (q - 2.0) / (2.0 * q)).abs() < 1e-12);
            prop_assert!(e.theta_rigidity >= 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn corrected_hessian_is_trace_free(seed in 0u64..1000, a in 0.0f64..0.4, q in 2.1f64..3.9) {
        let e = build_exponents(2, q).unwrap();
        for g in [sphere(200), bumpy(a, 200)] {
            let u = g.function(random::random_positive(&mut random::rng(seed), &g, 6)).unwrap();
            for s in q_tensor_samples(&e, &u).unwrap() {
                let size = s.hess_meridian.abs() + s.hess_orbit.abs() + s.correction_meridian.abs() + 1.0;
                prop_assert!(s.trace(2).abs() <= 1e-8 * size);
            }
        }
    }

    #[test]
    fn holder_inequality(seed in 0u64..1000, scale in 0.1f64..30.0) {
        let g = sphere(300);
        let e = build_exponents(2, 4.0).unwrap();
        let mut rng = random::rng(seed);
        let u = g.function(random::random_positive(&mut rng, &g, 6)).unwrap();
        let v = g.function(random::random_nonnegative_potential(&mut rng, &g, 6, scale)).unwrap();
        let gap = holder_gap(&u, &v, &e, 1.0).unwrap();
        prop_assert!(gap >= -1e-12 * scale);
        let opt = optimal_potential_from_minimizer(&u, &e, scale).unwrap();
        let equal = holder_gap(&u, &opt, &e, 1.0).unwrap();
        prop_assert!(equal.abs() <= 1e-12 * scale * g.volume());
    }

    #[test]
    fn functional_nonnegative_below_threshold(seed in 0u64..1000, q in 2.2f64..3.9, lambda in 0.1f64..1.9) {
        let g = sphere(300);
        let e = build_exponents(2, q).unwrap();
        let u = g.function(random::random_positive(&mut random::rng(seed), &g, 6)).unwrap();
        let f = functional_f(&u, &e, lambda).unwrap();
        prop_assert!(f >= -1e-10, "F = {}", f);
        let v = u.map(|x| x.powf(e.flow_beta.value().unwrap()));
        prop_assert!(interpolation_defect(&v, &e, lambda) >= -1e-10);
    }

    #[test]
    fn flow_conserves_rho_mass(seed in 0u64..1000, q in prop::sample::select(vec![3.0f64, 4.0])) {
        let g = sphere(200);
        let e = build_exponents(2, q).unwrap();
        let u = g.function(random::random_positive(&mut random::rng(seed), &g, 6)).unwrap();
        let trace = run_flow(&u, &e, 2.0, 0.5, FlowOptions::default()).unwrap();
        let m0 = trace.mass_monitor[0];
        for m in &trace.mass_monitor {
            prop_assert!(((m - m0) / m0).abs() < 1e-12);
        }
        prop_assert!(trace.final_state.is_positive());
    }

    #[test]
    fn norm_ordering(seed in 0u64..1000, q in 2.1f64..8.0) {
        let g = sphere(200);
        let u = g.function(random::random_positive(&mut random::rng(seed), &g, 6)).unwrap();
        let n = u.norms(q);
        let vol = g.volume();
        prop_assert!(n.l2 <= vol.powf(0.5 - 1.0 / q) * n.lq * (1.0 + 1e-12));
    }
}
