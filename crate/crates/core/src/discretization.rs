//! Cell-centred finite volumes on the meridian.
//!
//! Pole-closed meridians use nodes `s_j = (j + ½) h`; the stiffness couples
//! neighbouring cells through the density `w` at the shared face, and faces at
//! the poles carry zero flux (regular axisymmetric functions have `u' = 0`
//! there). The lumped mass of a cell is the exact cell integral of `w`, so the
//! discrete volume is the true volume and `Σ m_j = vol` holds to roundoff.
//! Circles use a uniform periodic grid.

use std::sync::Arc;

use crate::error::{Result, SmlError};
use crate::linalg::{generalized_pair, SymTridiag};
use crate::manifold::{Boundary, ManifoldProfile};
use crate::quadrature::gauss_legendre4;

/// Default node count for manifold-level quantities.
pub const DEFAULT_NODES: usize = 800;

/// Minimum node count accepted by [`Grid::new`].
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone)]
pub struct Grid {
    manifold: Arc<ManifoldProfile>,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    mass: Vec<f64>,
    /// Flux coefficient `w(face)/h` across the face to the right of each node.
    face_coeff: Vec<f64>,
    stiffness: SymTridiag,
}

/// Assembled quadratic forms: `uᵀ K u = ∫|∇u|²`, `uᵀ diag(mass) u = ∫u²`.
#[derive(Debug, Clone)]
pub struct OperatorMatrices {
    pub stiffness: SymTridiag,
    pub mass: Vec<f64>,
}

impl OperatorMatrices {
    /// Lumped `∫ V u φ dv_g`.
    pub fn potential_mass(&self, v: &[f64]) -> Vec<f64> {
        self.mass.iter().zip(v).map(|(m, x)| m * x).collect()
    }

    /// `K - diag(mass V)`: the form of `-Δ_g - V`.
    pub fn schrodinger(&self, v: &[f64], sign: f64) -> SymTridiag {
        let shift: Vec<f64> = self.potential_mass(v).iter().map(|x| sign * x).collect();
        self.stiffness.add_diagonal(&shift)
    }
}

impl Grid {
    pub fn new(manifold: Arc<ManifoldProfile>, n: usize) -> Result<Grid> {
        if n < MIN_NODES {
            return Err(SmlError::InvalidParameter(format!("grid needs at least {MIN_NODES} nodes, got {n}")));
        }
        let length = manifold.domain_length;
        let h = length / n as f64;
        let (nodes, mass, face_coeff, stiffness) = match manifold.boundary {
            Boundary::Periodic => {
                let nodes: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
                let mass = vec![h; n];
                let face = vec![1.0 / h; n];
                let stiffness = SymTridiag { diag: vec![2.0 / h; n], off: vec![-1.0 / h; n], periodic: true };
                (nodes, mass, face, stiffness)
            }
            Boundary::SymmetricPoles => {
                let nodes: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
                let mass: Vec<f64> = (0..n)
                    .map(|j| gauss_legendre4(&|s| manifold.weight(s), j as f64 * h, (j + 1) as f64 * h))
                    .collect();
                let mut face: Vec<f64> = (0..n - 1).map(|j| manifold.weight((j + 1) as f64 * h) / h).collect();
                face.push(0.0);
                let mut diag = vec![0.0; n];
                for j in 0..n - 1 {
                    diag[j] += face[j];
                    diag[j + 1] += face[j];
                }
                let off: Vec<f64> = face[..n - 1].iter().map(|c| -c).collect();
                (nodes, mass, face, SymTridiag { diag, off, periodic: false })
            }
        };
        if mass.iter().any(|m| !(*m > 0.0)) {
            return Err(SmlError::InvalidProfile("cell mass must be positive".into()));
        }
        Ok(Grid { manifold, n, h, nodes, mass, face_coeff, stiffness })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn manifold(&self) -> &ManifoldProfile {
        &self.manifold
    }

    pub fn manifold_arc(&self) -> Arc<ManifoldProfile> {
        self.manifold.clone()
    }

    pub fn periodic(&self) -> bool {
        self.manifold.boundary == Boundary::Periodic
    }

    /// Lumped mass (cell volumes).
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Weights `ω_j` with `Σ ω_j w(s_j) f(s_j) ≈ ∫ f w ds`.
    pub fn quad_weights(&self) -> Vec<f64> {
        self.nodes.iter().zip(&self.mass).map(|(s, m)| m / self.manifold.weight(*s)).collect()
    }

    pub fn stiffness(&self) -> &SymTridiag {
        &self.stiffness
    }

    pub fn operators(&self) -> OperatorMatrices {
        OperatorMatrices { stiffness: self.stiffness.clone(), mass: self.mass.clone() }
    }

    /// Discrete volume `Σ m_j`.
    pub fn volume(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|s| f(*s)).collect()
    }

    /// `∫ f dv_g`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.mass.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u).zip(v).map(|((m, a), b)| m * a * b).sum()
    }

    /// `(∫|u|^q dv_g)^{1/q}`; also valid for `0 < q < 1`.
    pub fn lq_norm(&self, u: &[f64], q: f64) -> f64 {
        self.mass.iter().zip(u).map(|(m, v)| m * v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }

    /// `∫|∇u|² dv_g = uᵀKu`.
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for j in 0..n - 1 {
            total += self.face_coeff[j] * (u[j + 1] - u[j]).powi(2);
        }
        if self.periodic() {
            total += self.face_coeff[n - 1] * (u[0] - u[n - 1]).powi(2);
        }
        total
    }

    /// `K u`, assembled from face fluxes so constants map to exactly zero.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        let faces = if self.periodic() { n } else { n - 1 };
        for j in 0..faces {
            let r = (j + 1) % n;
            let flux = self.face_coeff[j] * (u[r] - u[j]);
            out[j] -= flux;
            out[r] += flux;
        }
        out
    }

    /// Discrete `Δ_g u = -M⁻¹ K u`.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness_apply(u).iter().zip(&self.mass).map(|(k, m)| -k / m).collect()
    }

    /// Centred first derivative at the nodes; mirror reflection at the poles.
    pub fn nodal_derivative(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let h2 = 2.0 * self.h;
        (0..n)
            .map(|j| {
                let (l, r) = self.neighbours(u, j);
                (r - l) / h2
            })
            .collect()
    }

    /// Centred second derivative `u''` at the nodes.
    pub fn nodal_second_derivative(&self, u: &[f64]) -> Vec<f64> {
        let hh = self.h * self.h;
        (0..self.n)
            .map(|j| {
                let (l, r) = self.neighbours(u, j);
                (r - 2.0 * u[j] + l) / hh
            })
            .collect()
    }

    fn neighbours(&self, u: &[f64], j: usize) -> (f64, f64) {
        let n = self.n;
        if self.periodic() {
            (u[(j + n - 1) % n], u[(j + 1) % n])
        } else {
            let l = if j == 0 { u[0] } else { u[j - 1] };
            let r = if j == n - 1 { u[n - 1] } else { u[j + 1] };
            (l, r)
        }
    }

    /// Face differences `(u_{j+1} - u_j)/h` paired with the face flux
    /// coefficient times `h` (i.e. `w` at the face); periodic grids include
    /// the wrap-around face.
    pub fn face_gradients(&self, u: &[f64]) -> Vec<(f64, f64)> {
        let n = self.n;
        let faces = if self.periodic() { n } else { n - 1 };
        (0..faces)
            .map(|j| {
                let r = u[(j + 1) % n];
                ((r - u[j]) / self.h, self.face_coeff[j] * self.h)
            })
            .collect()
    }

    /// Meridian coordinate of face `j` (between nodes `j` and `j+1`).
    pub fn face_position(&self, j: usize) -> f64 {
        if self.periodic() {
            (j as f64 + 0.5) * self.h
        } else {
            (j + 1) as f64 * self.h
        }
    }

    /// First nonzero eigenvalue of `-Δ_h`.
    pub fn spectral_gap(&self) -> Result<f64> {
        Ok(generalized_pair(&self.stiffness, &self.mass, 1)?.0)
    }

    /// Ground state of `-Δ_h + sign·V`.
    pub fn potential_ground_state(&self, v: &[f64], sign: f64) -> Result<(f64, Vec<f64>, f64)> {
        lowest_eigenpair(&self.operators().schrodinger(v, sign), &self.mass)
    }

    pub fn function(self: &Arc<Self>, values: Vec<f64>) -> Result<GridFunction> {
        GridFunction::new(self.clone(), values)
    }

    pub fn constant(self: &Arc<Self>, c: f64) -> GridFunction {
        GridFunction { grid: self.clone(), values: vec![c; self.n] }
    }

    pub fn from_fn(self: &Arc<Self>, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { grid: self.clone(), values: self.sample(f) }
    }
}

/// Smallest generalized eigenpair of `(A, diag(mass))`; see
/// [`crate::linalg::lowest_generalized`].
pub fn lowest_eigenpair(a: &SymTridiag, mass: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    crate::linalg::lowest_generalized(a, mass)
}

/// Values of a function at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub lq: f64,
    pub h1_seminorm: f64,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.n() {
            return Err(SmlError::DimensionMismatch { expected: grid.n(), got: values.len() });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn with_values(&self, values: Vec<f64>) -> GridFunction {
        debug_assert_eq!(values.len(), self.values.len());
        GridFunction { grid: self.grid.clone(), values }
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        self.with_values(self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn norms(&self, q: f64) -> Norms {
        norms(self, q)
    }

    pub fn laplacian(&self) -> GridFunction {
        laplacian_apply(self)
    }

    /// `max |u - mean(u)|`.
    pub fn distance_to_constant(&self) -> f64 {
        let mean = self.integral() / self.grid.volume();
        self.values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
    }
}

/// L², L^q and H¹-seminorm of `u` for the manifold measure.
pub fn norms(u: &GridFunction, q: f64) -> Norms {
    let g = &u.grid;
    Norms {
        l2: g.inner(&u.values, &u.values).sqrt(),
        lq: g.lq_norm(&u.values, q),
        h1_seminorm: g.dirichlet(&u.values).sqrt(),
    }
}

/// Discrete Laplace–Beltrami operator.
pub fn laplacian_apply(u: &GridFunction) -> GridFunction {
    u.with_values(u.grid.laplacian(&u.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{make_circle, make_sphere};
    use nalgebra::{DMatrix, SymmetricEigen};
    use std::f64::consts::PI;

    fn grid(m: ManifoldProfile, n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Arc::new(m), n).unwrap())
    }

    #[test]
    fn norms_of_constants_and_harmonics() {
        let g = grid(make_sphere(2).unwrap(), 400);
        let one = g.constant(1.0);
        let nm = one.norms(4.0);
        assert!((nm.l2 - (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!((nm.lq - (4.0 * PI).powf(0.25)).abs() < 1e-12);
        assert!(nm.h1_seminorm.abs() < 1e-12);

        let c = grid(make_circle(2.0 * PI).unwrap(), 400);
        let u = c.from_fn(|s| s.cos());
        let nm = u.norms(2.0);
        assert!((nm.l2 - PI.sqrt()).abs() < 1e-12);
        assert!((nm.h1_seminorm - PI.sqrt()).abs() < 1e-4);

        let z = g.from_fn(|s| s.cos());
        let nm = z.norms(2.0);
        assert!((nm.h1_seminorm.powi(2) / nm.l2.powi(2) - 2.0).abs() < 1e-4);
    }

    #[test]
    fn stiffness_annihilates_constants_and_mass_sums_to_volume() {
        for m in [make_sphere(2).unwrap(), make_sphere(3).unwrap(), make_circle(3.0).unwrap()] {
            let vol = m.volume;
            let g = grid(m, 500);
            let k1 = g.stiffness_apply(&vec![1.0; 500]);
            let scale = g.stiffness().diag.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            assert!(k1.iter().all(|v| v.abs() <= 1e-12 * scale));
            assert!((g.volume() / vol - 1.0).abs() < 1e-12);
            let qw = g.quad_weights();
            let s: f64 = qw.iter().zip(g.nodes()).map(|(w, x)| w * g.manifold().weight(*x)).sum();
            assert!((s / vol - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lowest_eigenpair_examples() {
        let g = grid(make_sphere(2).unwrap(), 200);
        let ops = g.operators();
        let (lam, x, res) = lowest_eigenpair(&ops.stiffness, &ops.mass).unwrap();
        assert!(lam.abs() < 1e-10);
        assert!(res < 1e-9);
        let c = x[0];
        assert!(c > 0.0 && x.iter().all(|v| (v - c).abs() < 1e-8));

        let shifted = ops.schrodinger(&vec![0.7; 200], -1.0);
        let (lam, _, _) = lowest_eigenpair(&shifted, &ops.mass).unwrap();
        assert!((lam + 0.7).abs() < 1e-10);

        let circ = grid(make_circle(2.0 * PI).unwrap(), 2000);
        assert!((circ.spectral_gap().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn laplacian_of_first_harmonic() {
        let g = grid(make_sphere(2).unwrap(), 400);
        let one = g.constant(1.0).laplacian();
        assert!(one.values.iter().all(|v| v.abs() < 1e-9));
        let u = g.from_fn(|s| s.cos());
        let lu = u.laplacian();
        let err = lu.values.iter().zip(g.nodes()).map(|(a, s)| (a + 2.0 * s.cos()).abs()).fold(0.0, f64::max);
        assert!(err < 20.0 / (400.0f64).powi(2), "err = {err}");
        let c = grid(make_circle(2.0 * PI).unwrap(), 400);
        let u = c.from_fn(|s| (3.0 * s).cos());
        let lu = u.laplacian();
        let err = lu.values.iter().zip(c.nodes()).map(|(a, s)| (a + 9.0 * (3.0 * s).cos()).abs()).fold(0.0, f64::max);
        assert!(err < 3e-3);
    }

    #[test]
    fn integration_by_parts() {
        let g = grid(make_sphere(3).unwrap(), 300);
        let u = g.sample(|s| (2.0 * s).cos() + 0.3 * s.cos());
        let phi = g.sample(|s| 1.0 + s.cos().powi(3));
        let lu = g.laplacian(&u);
        let lhs = g.inner(&lu, &phi);
        let ku = g.stiffness_apply(&u);
        let rhs: f64 = ku.iter().zip(&phi).map(|(a, b)| a * b).sum();
        assert!((lhs + rhs).abs() <= 1e-10 * rhs.abs());
    }

    #[test]
    fn matrices_are_symmetric_bitwise() {
        let g = grid(make_sphere(2).unwrap(), 50);
        let k = g.stiffness();
        let n = k.n();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = k.diag[i];
        }
        for i in 0..n - 1 {
            dense[(i, i + 1)] = k.off[i];
            dense[(i + 1, i)] = k.off[i];
        }
        assert_eq!(dense, dense.transpose());
        // dense oracle for the generalized spectrum
        let r: Vec<f64> = g.mass().iter().map(|m| 1.0 / m.sqrt()).collect();
        let b = DMatrix::from_fn(n, n, |i, j| dense[(i, j)] * r[i] * r[j]);
        let mut ev: Vec<f64> = SymmetricEigen::new(b).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((g.spectral_gap().unwrap() - ev[1]).abs() < 1e-10);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid::new(Arc::new(make_sphere(2).unwrap()), 3).is_err());
    }
}
