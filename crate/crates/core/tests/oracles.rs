//! Checks against values computed independently of the library: closed-form
//! soliton integrals, a fixed-step RK4 shooting, exact discrete spectra and
//! explicit spherical harmonics.

use std::f64::consts::PI;
use std::sync::Arc;

use sml_core::discretization::Grid;
use sml_core::euclidean::kqd;
use sml_core::exponents::{build_exponents, theta_rigidity};
use sml_core::manifold::{make_circle, make_revolution, make_sphere, AnalyticProfile};
use sml_core::rigidity::lambda_star_linearized;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `K_{q,1} = (∫w^q)^{1-2/q}` for `w = (q/2)^{1/(q-2)} sech^{2/(q-2)}((q-2)x/2)`.
fn soliton_kqd(q: f64) -> f64 {
    let c = (q - 2.0) / 2.0;
    let a = 2.0 * q / (q - 2.0);
    // sech^a decays like e^{-a c x}; stop where it is below 1e-30
    let x_max = 70.0 / (a * c);
    let tail = simpson(|x| (1.0 / (c * x).cosh()).powf(a), 0.0, x_max, 200_000);
    let integral = 2.0 * (q / 2.0).powf(q / (q - 2.0)) * tail;
    integral.powf(1.0 - 2.0 / q)
}

#[test]
fn kqd_one_dimensional_closed_form() {
    let e = build_exponents(1, 4.0).unwrap();
    assert!((kqd(&e).unwrap() / (4.0 / 3f64.sqrt()) - 1.0).abs() < 1e-6);
    assert!((soliton_kqd(4.0) / (4.0 / 3f64.sqrt()) - 1.0).abs() < 1e-10);
    for i in 0..20 {
        let q = 2.3 + 0.5 * i as f64;
        let e = build_exponents(1, q).unwrap();
        let k = kqd(&e).unwrap();
        let oracle = soliton_kqd(q);
        assert!((k / oracle - 1.0).abs() < 1e-6, "q = {q}: {k} vs {oracle}");
    }
}

/// Shooting with classical RK4 at fixed step `h`; returns `(∫w^q)^{1-2/q}`.
fn rk4_kqd(d: usize, q: f64, h: f64) -> f64 {
    let dm1 = d as f64 - 1.0;
    let rhs = |r: f64, v: f64, w: f64| -> (f64, f64) {
        let damping = if r > 0.0 { dm1 / r * w } else { 0.0 };
        (w, -damping + v - v.abs().powf(q - 2.0) * v)
    };
    // near r = 0 use the series v = a + (a - a^{q-1}) r²/(2d)
    let shoot = |a: f64, record: bool| -> (i32, f64, Vec<(f64, f64)>) {
        let r0 = h;
        let c = (a - a.powf(q - 1.0)) / (2.0 * d as f64);
        let (mut r, mut v, mut w) = (r0, a + c * r0 * r0, 2.0 * c * r0);
        let mut path = Vec::new();
        if record {
            path.push((0.0, a));
            path.push((r, v));
        }
        while r < 40.0 {
            let (k1v, k1w) = rhs(r, v, w);
            let (k2v, k2w) = rhs(r + h / 2.0, v + h / 2.0 * k1v, w + h / 2.0 * k1w);
            let (k3v, k3w) = rhs(r + h / 2.0, v + h / 2.0 * k2v, w + h / 2.0 * k2w);
            let (k4v, k4w) = rhs(r + h, v + h * k3v, w + h * k3w);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            r += h;
            if record {
                path.push((r, v));
            }
            if v < 0.0 {
                return (1, r, path);
            }
            if w > 0.0 {
                return (-1, r, path);
            }
        }
        (0, r, path)
    };
    let (mut lo, mut hi) = (1.0, 6.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match shoot(mid, false).0 {
            1 => hi = mid,
            _ => lo = mid,
        }
    }
    let (_, _, path) = shoot(lo, true);
    // integrate up to where the shot leaves the ground state, cut at v = 1e-5
    let area = 2.0 * PI.powf(d as f64 / 2.0) / gamma_half_integer(d);
    let mut integral = 0.0;
    for win in path.windows(2) {
        let ((r0, v0), (r1, v1)) = (win[0], win[1]);
        if v1 < 1e-5 || v1 > v0 {
            break;
        }
        let f0 = v0.powf(q) * r0.powi(d as i32 - 1);
        let f1 = v1.powf(q) * r1.powi(d as i32 - 1);
        integral += 0.5 * (f0 + f1) * (r1 - r0);
    }
    (area * integral).powf(1.0 - 2.0 / q)
}

/// `Γ(d/2)` for small `d`.
fn gamma_half_integer(d: usize) -> f64 {
    match d {
        1 => PI.sqrt(),
        2 => 1.0,
        3 => PI.sqrt() / 2.0,
        4 => 1.0,
        _ => unreachable!(),
    }
}

#[test]
fn kqd_second_integrator() {
    for (d, q) in [(2, 4.0), (2, 3.0), (3, 3.0)] {
        let e = build_exponents(d, q).unwrap();
        let k = kqd(&e).unwrap();
        let oracle = rk4_kqd(d, q, 2e-3);
        assert!((k / oracle - 1.0).abs() < 1e-4, "d={d} q={q}: {k} vs {oracle}");
    }
}

#[test]
fn circle_discrete_spectrum_is_exact() {
    for (len, n) in [(2.0 * PI, 800), (5.0, 256)] {
        let g = Grid::new(Arc::new(make_circle(len).unwrap()), n).unwrap();
        let h = len / n as f64;
        let k0 = 2.0 * PI / len;
        let exact = 4.0 / (h * h) * (k0 * h / 2.0).sin().powi(2);
        let got = g.spectral_gap().unwrap();
        assert!((got / exact - 1.0).abs() < 1e-12, "{got} vs {exact}");
    }
}

#[test]
fn linearized_quotient_on_sphere_harmonics() {
    // Legendre P_k on S², eigenvalue k(k+1)
    let legendre = [
        |x: f64| x,
        |x: f64| 0.5 * (3.0 * x * x - 1.0),
        |x: f64| 0.5 * (5.0 * x.powi(3) - 3.0 * x),
        |x: f64| (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
    ];
    let g = Arc::new(Grid::new(Arc::new(make_sphere(2).unwrap()), 800).unwrap());
    for (k, p) in legendre.iter().enumerate() {
        let k = (k + 1) as f64;
        let v = lambda_star_linearized(&g.from_fn(|s| p(s.cos()))).unwrap();
        assert!((v / (k * (k + 1.0)) - 1.0).abs() < 1e-4, "P_{k}: {v}");
    }
    // Gegenbauer C_k^{(1)}(cos s) = sin((k+1)s)/sin s on S³, eigenvalue k(k+2)
    let g3 = Arc::new(Grid::new(Arc::new(make_sphere(3).unwrap()), 800).unwrap());
    for k in 1..=3 {
        let kf = k as f64;
        let v = lambda_star_linearized(&g3.from_fn(|s| ((kf + 1.0) * s).sin() / s.sin())).unwrap();
        assert!((v / (kf * (kf + 2.0)) - 1.0).abs() < 1e-4, "C_{k}: {v}");
    }
}

#[test]
fn exponent_table() {
    // θ on S² for q = 3, 4 and the S³ value at q = 3
    assert!((theta_rigidity(2, 3.0) - 0.2).abs() < 1e-15);
    assert!((theta_rigidity(2, 4.0) - 3.0 / 11.0).abs() < 1e-15);
    assert!((theta_rigidity(3, 3.0) - 8.0 / 17.0).abs() < 1e-15);
    assert!((build_exponents(2, 4.0).unwrap().kappa(4.0 * PI) - (4.0 * PI).sqrt()).abs() < 1e-13);
    let e = build_exponents(2, 4.0).unwrap();
    assert_eq!(e.p_holder, 2.0);
    assert_eq!(e.vartheta, 0.5);
    assert!((e.flow_beta.value().unwrap() - 4.0).abs() < 1e-12);
    let e = build_exponents(2, 3.0).unwrap();
    assert!((e.flow_beta.value().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn gauss_bonnet_on_revolutions() {
    for a in [0.05, 0.1, 0.2, 0.4] {
        let m = make_revolution(Arc::new(AnalyticProfile::bumpy_sphere(a)), PI).unwrap();
        let total = m.total_curvature().unwrap();
        assert!((total / (4.0 * PI) - 1.0).abs() < 1e-6, "a = {a}: {total}");
    }
}
