//! Symmetric model manifolds reduced to a meridian coordinate.
//!
//! Three kinds are supported: circles (periodic, weight 1), spheres `S^d`
//! with meridian `s ∈ [0, π]` and warping `f = sin`, and surfaces of
//! revolution `ds² + f(s)² dφ²` with a user profile. The volume density along
//! the meridian is `w(s) = |S^{d-1}| f(s)^{d-1}`, so meridian integrals are
//! genuine manifold integrals for the Lebesgue-induced measure.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::{Grid, DEFAULT_NODES};
use crate::error::{Result, SmlError};
use crate::exponents::unit_sphere_area;
use crate::quadrature::gauss_legendre4;

/// Tolerance on the pole closure conditions of a revolution profile.
pub const CLOSURE_TOLERANCE: f64 = 1e-6;

/// Warping function `f` of a rotationally symmetric metric `ds² + f(s)² g_{S^{d-1}}`.
pub trait MeridianProfile: Send + Sync + fmt::Debug {
    fn value(&self, s: f64) -> f64;
    fn slope(&self, s: f64) -> f64;
    fn second(&self, s: f64) -> f64;
}

/// `f(s) = sin s` on `[0, π]`.
#[derive(Debug, Clone, Copy)]
pub struct SineProfile;

impl MeridianProfile for SineProfile {
    fn value(&self, s: f64) -> f64 {
        s.sin()
    }
    fn slope(&self, s: f64) -> f64 {
        s.cos()
    }
    fn second(&self, s: f64) -> f64 {
        -s.sin()
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A profile given by closed-form value, first and second derivative.
#[derive(Clone)]
pub struct AnalyticProfile {
    pub name: String,
    f: ScalarFn,
    df: ScalarFn,
    d2f: ScalarFn,
}

impl AnalyticProfile {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AnalyticProfile { name: name.into(), f: Arc::new(f), df: Arc::new(df), d2f: Arc::new(d2f) }
    }

    /// `f(s) = sin s (1 + a sin² s)` on `[0, π]`: a smooth, nonconstant
    /// curvature deformation of the round sphere for small `a`.
    pub fn bumpy_sphere(a: f64) -> Self {
        AnalyticProfile::new(
            format!("sin(s)(1+{a} sin^2(s))"),
            move |s| s.sin() * (1.0 + a * s.sin().powi(2)),
            move |s| s.cos() + 3.0 * a * s.sin().powi(2) * s.cos(),
            move |s| {
                let (sn, cs) = s.sin_cos();
                -sn + a * (6.0 * sn * cs * cs - 3.0 * sn.powi(3))
            },
        )
    }
}

impl fmt::Debug for AnalyticProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AnalyticProfile({})", self.name)
    }
}

impl MeridianProfile for AnalyticProfile {
    fn value(&self, s: f64) -> f64 {
        (self.f)(s)
    }
    fn slope(&self, s: f64) -> f64 {
        (self.df)(s)
    }
    fn second(&self, s: f64) -> f64 {
        (self.d2f)(s)
    }
}

/// Clamped cubic spline through tabulated `(s, f(s))` samples.
///
/// End slopes come from the quartic through the five samples nearest each
/// end. Abscissae must be strictly increasing and start at `0`.
#[derive(Debug, Clone)]
pub struct SplineProfile {
    s: Vec<f64>,
    f: Vec<f64>,
    m: Vec<f64>,
}

impl SplineProfile {
    pub fn new(s: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let n = s.len();
        if n != f.len() {
            return Err(SmlError::DimensionMismatch { expected: n, got: f.len() });
        }
        if n < 6 {
            return Err(SmlError::InvalidProfile("need at least 6 samples".into()));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SmlError::InvalidProfile("abscissae must be strictly increasing".into()));
        }
        if s[0].abs() > 1e-12 {
            return Err(SmlError::InvalidProfile("meridian must start at s = 0".into()));
        }
        let slope0 = endpoint_derivative(&s[..5], &f[..5], s[0]);
        let slope1 = endpoint_derivative(&s[n - 5..], &f[n - 5..], s[n - 1]);

        // Clamped spline: solve for second derivatives at the knots.
        let h: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0 * h[0];
        sup[0] = h[0];
        rhs[0] = 6.0 * ((f[1] - f[0]) / h[0] - slope0);
        for i in 1..n - 1 {
            sub[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * ((f[i + 1] - f[i]) / h[i] - (f[i] - f[i - 1]) / h[i - 1]);
        }
        sub[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (slope1 - (f[n - 1] - f[n - 2]) / h[n - 2]);
        let m = crate::linalg::thomas(&sub, &diag, &sup, &rhs)?;
        Ok(SplineProfile { s, f, m })
    }

    /// Read a two-column text file `s f(s)`; `#` starts a comment.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut s = Vec::new();
        let mut f = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|c| !c.is_empty()).collect();
            if cols.len() != 2 {
                return Err(SmlError::InvalidProfile(format!("line {}: expected two columns", lineno + 1)));
            }
            let parse = |c: &str| {
                c.parse::<f64>()
                    .map_err(|_| SmlError::InvalidProfile(format!("line {}: bad number {c:?}", lineno + 1)))
            };
            s.push(parse(cols[0])?);
            f.push(parse(cols[1])?);
        }
        SplineProfile::new(s, f)
    }

    pub fn length(&self) -> f64 {
        *self.s.last().unwrap()
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.s.len();
        match self.s.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let i = self.locate(x);
        let h = self.s[i + 1] - self.s[i];
        let a = (self.s[i + 1] - x) / h;
        let b = (x - self.s[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (f0, f1) = (self.f[i], self.f[i + 1]);
        let v = a * f0 + b * f1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dv = (f1 - f0) / h - (3.0 * a * a - 1.0) * h / 6.0 * m0 + (3.0 * b * b - 1.0) * h / 6.0 * m1;
        let d2v = a * m0 + b * m1;
        (v, dv, d2v)
    }
}

/// Derivative at `x0` of the polynomial interpolating `(xs, ys)`.
fn endpoint_derivative(xs: &[f64], ys: &[f64], x0: f64) -> f64 {
    let k = xs.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut denom = 1.0;
        for j in 0..k {
            if j != i {
                denom *= xs[i] - xs[j];
            }
        }
        let mut deriv = 0.0;
        for m in 0..k {
            if m == i {
                continue;
            }
            let mut prod = 1.0;
            for j in 0..k {
                if j != i && j != m {
                    prod *= x0 - xs[j];
                }
            }
            deriv += prod;
        }
        total += ys[i] * deriv / denom;
    }
    total
}

impl MeridianProfile for SplineProfile {
    fn value(&self, s: f64) -> f64 {
        self.eval(s).0
    }
    fn slope(&self, s: f64) -> f64 {
        self.eval(s).1
    }
    fn second(&self, s: f64) -> f64 {
        self.eval(s).2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Circle,
    Sphere,
    Revolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    SymmetricPoles,
}

/// A model manifold described along its meridian. Immutable once built.
#[derive(Debug, Clone)]
pub struct ManifoldProfile {
    pub kind: ManifoldKind,
    pub d: usize,
    pub domain_length: f64,
    pub profile: Option<Arc<dyn MeridianProfile>>,
    pub volume: f64,
    pub lambda_one: f64,
    pub boundary: Boundary,
    /// `|S^{d-1}|`, the volume of the transverse orbit of unit radius.
    orbit_area: f64,
    label: String,
}

/// Serializable summary used in exported records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldDescriptor {
    pub kind: ManifoldKind,
    pub d: usize,
    pub domain_length: f64,
    pub volume: f64,
    pub lambda_one: f64,
    pub label: String,
}

/// Unit sphere `S^d`; `d = 1` is the circle of circumference `2π`.
pub fn make_sphere(d: usize) -> Result<ManifoldProfile> {
    if d == 0 {
        return Err(SmlError::InvalidParameter("sphere dimension must be at least 1".into()));
    }
    if d == 1 {
        let mut m = make_circle(2.0 * std::f64::consts::PI)?;
        m.label = "sphere:1".into();
        return Ok(m);
    }
    Ok(ManifoldProfile {
        kind: ManifoldKind::Sphere,
        d,
        domain_length: std::f64::consts::PI,
        profile: Some(Arc::new(SineProfile)),
        volume: unit_sphere_area(d),
        lambda_one: d as f64,
        boundary: Boundary::SymmetricPoles,
        orbit_area: unit_sphere_area(d - 1),
        label: format!("sphere:{d}"),
    })
}

/// Circle of circumference `length`.
pub fn make_circle(length: f64) -> Result<ManifoldProfile> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(SmlError::InvalidParameter(format!("circumference {length} must be positive")));
    }
    let k = 2.0 * std::f64::consts::PI / length;
    Ok(ManifoldProfile {
        kind: ManifoldKind::Circle,
        d: 1,
        domain_length: length,
        profile: None,
        volume: length,
        lambda_one: k * k,
        boundary: Boundary::Periodic,
        orbit_area: 1.0,
        label: format!("circle:{length}"),
    })
}

/// Surface of revolution `ds² + f(s)² dφ²`, `s ∈ [0, L]`.
///
/// The profile must close smoothly at both poles (`f = 0`, `f' = ±1`) and be
/// positive inside. The first nonzero eigenvalue is computed on a grid of
/// [`DEFAULT_NODES`] cells.
pub fn make_revolution(profile: Arc<dyn MeridianProfile>, length: f64) -> Result<ManifoldProfile> {
    make_revolution_labeled(profile, length, "revolution".into())
}

pub fn make_revolution_labeled(
    profile: Arc<dyn MeridianProfile>,
    length: f64,
    label: String,
) -> Result<ManifoldProfile> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(SmlError::InvalidParameter(format!("meridian length {length} must be positive")));
    }
    let checks = [
        ("f(0) = 0", profile.value(0.0), 0.0),
        ("f(L) = 0", profile.value(length), 0.0),
        ("f'(0) = 1", profile.slope(0.0), 1.0),
        ("f'(L) = -1", profile.slope(length), -1.0),
    ];
    for (name, got, want) in checks {
        if (got - want).abs() > CLOSURE_TOLERANCE {
            return Err(SmlError::InvalidProfile(format!("closure condition {name} violated: got {got}")));
        }
    }
    let samples = 2000;
    for i in 1..samples {
        let s = length * i as f64 / samples as f64;
        let v = profile.value(s);
        if !(v > 0.0) {
            return Err(SmlError::InvalidProfile(format!("f({s}) = {v} is not positive")));
        }
    }
    let mut m = ManifoldProfile {
        kind: ManifoldKind::Revolution,
        d: 2,
        domain_length: length,
        profile: Some(profile),
        volume: f64::NAN,
        lambda_one: f64::NAN,
        boundary: Boundary::SymmetricPoles,
        orbit_area: 2.0 * std::f64::consts::PI,
        label,
    };
    m.volume = crate::quadrature::adaptive_simpson(&|s| m.weight(s), 0.0, length, 1e-13);
    let grid = Grid::new(Arc::new(m.clone()), DEFAULT_NODES)?;
    m.lambda_one = grid.spectral_gap()?;
    Ok(m)
}

/// Revolution surface from a two-column profile file.
pub fn load_revolution(path: impl AsRef<Path>) -> Result<ManifoldProfile> {
    let spline = SplineProfile::from_file(path.as_ref())?;
    let length = spline.length();
    make_revolution_labeled(Arc::new(spline), length, format!("revolution:{}", path.as_ref().display()))
}

impl ManifoldProfile {
    /// Volume density along the meridian.
    pub fn weight(&self, s: f64) -> f64 {
        match &self.profile {
            None => 1.0,
            Some(p) => self.orbit_area * p.value(s).powi(self.d as i32 - 1),
        }
    }

    /// `w'/w = (d-1) f'/f`; zero on circles.
    pub fn weight_log_slope(&self, s: f64) -> f64 {
        match &self.profile {
            None => 0.0,
            Some(p) => (self.d as f64 - 1.0) * p.slope(s) / p.value(s),
        }
    }

    /// `f'/f`, the principal curvature factor of the orbit directions.
    pub fn orbit_log_slope(&self, s: f64) -> f64 {
        match &self.profile {
            None => 0.0,
            Some(p) => p.slope(s) / p.value(s),
        }
    }

    /// `Ric(e_s, e_s) = -(d-1) f''/f` along the meridian.
    pub fn ricci_meridian(&self, s: f64) -> f64 {
        match (&self.profile, self.kind) {
            (None, _) => 0.0,
            (Some(_), ManifoldKind::Sphere) => self.d as f64 - 1.0,
            (Some(p), _) => {
                let s = self.pole_safe(s);
                -(self.d as f64 - 1.0) * p.second(s) / p.value(s)
            }
        }
    }

    /// Gauss curvature `-f''/f` of a surface; `None` unless `d = 2`.
    pub fn gauss_curvature(&self, s: f64) -> Option<f64> {
        if self.d != 2 {
            return None;
        }
        let p = self.profile.as_ref()?;
        if self.kind == ManifoldKind::Sphere {
            return Some(1.0);
        }
        let eps = 1e-4 * self.domain_length;
        // one-sided linear extrapolation next to the poles
        let k = |x: f64| -p.second(x) / p.value(x);
        Some(if s < eps {
            let (a, b) = (k(eps), k(2.0 * eps));
            a + (a - b) * (eps - s) / eps
        } else if s > self.domain_length - eps {
            let (a, b) = (k(self.domain_length - eps), k(self.domain_length - 2.0 * eps));
            a + (a - b) * (s - (self.domain_length - eps)) / eps
        } else {
            k(s)
        })
    }

    /// `∫ K dv_g` by composite Gauss–Legendre; `4π` for every closed surface.
    pub fn total_curvature(&self) -> Option<f64> {
        self.gauss_curvature(0.5 * self.domain_length)?;
        let cells = 4000;
        let h = self.domain_length / cells as f64;
        let integrand = |s: f64| self.gauss_curvature(s).unwrap_or(0.0) * self.weight(s);
        Some((0..cells).map(|j| gauss_legendre4(&integrand, j as f64 * h, (j + 1) as f64 * h)).sum())
    }

    fn pole_safe(&self, s: f64) -> f64 {
        let eps = 1e-7 * self.domain_length;
        s.clamp(eps, self.domain_length - eps)
    }

    pub fn orbit_area(&self) -> f64 {
        self.orbit_area
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn descriptor(&self) -> ManifoldDescriptor {
        ManifoldDescriptor {
            kind: self.kind,
            d: self.d,
            domain_length: self.domain_length,
            volume: self.volume,
            lambda_one: self.lambda_one,
            label: self.label.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use std::f64::consts::PI;

    #[test]
    fn gauss_bonnet() {
        for a in [0.0, 0.1, 0.3] {
            let m = make_revolution(Arc::new(AnalyticProfile::bumpy_sphere(a)), PI).unwrap();
            let total = m.total_curvature().unwrap();
            assert!((total / (4.0 * PI) - 1.0).abs() < 1e-6, "{a}: {total}");
        }
        assert!((make_sphere(2).unwrap().total_curvature().unwrap() - 4.0 * PI).abs() < 1e-9);
        assert!(make_sphere(3).unwrap().total_curvature().is_none());
    }

    #[test]
    fn sphere_data() {
        let m = make_sphere(2).unwrap();
        assert!((m.volume - 4.0 * PI).abs() < 1e-13);
        assert_eq!(m.lambda_one, 2.0);
        let m = make_sphere(1).unwrap();
        assert_eq!(m.kind, ManifoldKind::Circle);
        assert!((m.volume - 2.0 * PI).abs() < 1e-13);
        assert!((m.lambda_one - 1.0).abs() < 1e-15);
        let m = make_sphere(3).unwrap();
        assert!((m.volume - 2.0 * PI * PI).abs() < 1e-12);
        assert_eq!(m.lambda_one, 3.0);
        assert!(make_sphere(0).is_err());
    }

    #[test]
    fn circle_data() {
        assert!((make_circle(2.0 * PI).unwrap().lambda_one - 1.0).abs() < 1e-15);
        assert!((make_circle(PI).unwrap().lambda_one - 4.0).abs() < 1e-14);
        assert!((make_circle(4.0 * PI).unwrap().lambda_one - 0.25).abs() < 1e-15);
        assert!(make_circle(0.0).is_err());
        assert!(make_circle(-1.0).is_err());
    }

    #[test]
    fn sphere_weight_matches_area_formula() {
        for d in 2..6 {
            let m = make_sphere(d).unwrap();
            let v = adaptive_simpson(&|s| m.weight(s), 0.0, PI, 1e-13);
            assert!((v / m.volume - 1.0).abs() < 1e-10, "d = {d}");
            assert_eq!(m.ricci_meridian(0.7), d as f64 - 1.0);
        }
        assert_eq!(make_circle(3.0).unwrap().ricci_meridian(1.0), 0.0);
    }

    #[test]
    fn revolution_with_sine_reproduces_sphere() {
        let m = make_revolution(Arc::new(SineProfile), PI).unwrap();
        let s2 = make_sphere(2).unwrap();
        assert!((m.volume - s2.volume).abs() / s2.volume < 1e-8);
        // discrete eigenvalue on the default grid is second-order accurate
        assert!((m.lambda_one - 2.0).abs() < 1e-4);
        for s in [0.3, 1.0, 2.5] {
            assert!((m.gauss_curvature(s).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bumpy_profile_volume_and_curvature() {
        let a = 0.1;
        let m = make_revolution(Arc::new(AnalyticProfile::bumpy_sphere(a)), PI).unwrap();
        // 2π ∫ sin(1 + a sin²) = 2π (2 + a·4/3)
        let exact = 2.0 * PI * (2.0 + a * 4.0 / 3.0);
        assert!((m.volume / exact - 1.0).abs() < 1e-10);
        let k0 = m.gauss_curvature(PI / 2.0).unwrap();
        let k1 = m.gauss_curvature(0.5).unwrap();
        assert!((k0 - k1).abs() > 1e-2);
        // pole limit: -f'''(0)/f'(0) = 1 - 6a
        assert!((m.gauss_curvature(0.0).unwrap() - (1.0 - 6.0 * a)).abs() < 1e-5);
    }

    #[test]
    fn invalid_closure_rejected() {
        let bad = AnalyticProfile::new("0.9 slope", |s: f64| s.sin(), |s: f64| 0.9 * s.cos(), |s: f64| -s.sin());
        assert!(matches!(make_revolution(Arc::new(bad), PI), Err(SmlError::InvalidProfile(_))));
        let neg = AnalyticProfile::new(
            "dip",
            |s: f64| s.sin() - 0.9 * (2.0 * s).sin().powi(2),
            |s: f64| s.cos() - 1.8 * (2.0 * s).sin() * 2.0 * (2.0 * s).cos(),
            |s: f64| -s.sin(),
        );
        assert!(make_revolution(Arc::new(neg), PI).is_err());
    }

    #[test]
    fn spline_profile_tracks_sine() {
        let n = 401;
        let s: Vec<f64> = (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect();
        let f: Vec<f64> = s.iter().map(|x| x.sin()).collect();
        let sp = SplineProfile::new(s, f).unwrap();
        assert!((sp.slope(0.0) - 1.0).abs() < 1e-8);
        assert!((sp.slope(PI) + 1.0).abs() < 1e-8);
        for x in [0.1, 1.234, 2.9] {
            assert!((sp.value(x) - x.sin()).abs() < 1e-9);
            assert!((sp.second(x) + x.sin()).abs() < 1e-4);
        }
        let m = make_revolution(Arc::new(sp), PI).unwrap();
        assert!((m.volume / (4.0 * PI) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn spline_rejects_unsorted() {
        let s = vec![0.0, 0.2, 0.1, 0.3, 0.4, 0.5];
        let f = vec![0.0; 6];
        assert!(SplineProfile::new(s, f).is_err());
    }

    #[test]
    fn profile_file_roundtrip() {
        let dir = std::env::temp_dir().join(format!("sml-profile-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sphere.txt");
        let mut text = String::from("# s f\n");
        for i in 0..=300 {
            let s = PI * i as f64 / 300.0;
            text.push_str(&format!("{s:.17e} {:.17e}\n", s.sin()));
        }
        std::fs::write(&path, text).unwrap();
        let m = load_revolution(&path).unwrap();
        assert_eq!(m.kind, ManifoldKind::Revolution);
        assert!((m.lambda_one - 2.0).abs() < 1e-3);
        std::fs::remove_dir_all(&dir).ok();
    }
}
