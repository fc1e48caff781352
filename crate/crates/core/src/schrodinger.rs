//! Ground-state bounds for Schrödinger operators.
//!
//! For `q > 2`: `|λ₁(-Δ - V)| ≤ α(‖V‖_p)` with `p = q/(q-2)`. For `1 < q < 2`:
//! `λ₁(-Δ + W) ≥ ν(β̂)` with `β̂ = (∫W^{-p})^{-1/p}`, `p = q/(2-q)`.
//!
//! Both follow from Hölder's inequality and the interpolation inequality, and
//! the chain goes through unchanged for lumped quadrature, so on a fixed grid
//! the discrete statements hold exactly provided the discrete `μ` and `ν` are
//! true minima. All quantities of one certificate are computed on the grid of
//! the potential.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{Grid, GridFunction};
use crate::error::{Result, SmlError};
use crate::exponents::ExponentSet;
use crate::interp::{alpha_on_grid, beta_hat, known_lambda_star, nu_on_grid, SolverOptions};
use crate::manifold::ManifoldDescriptor;
use crate::random;

pub const CERTIFICATE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `|λ₁(-Δ - V)| ≤ α(‖V‖_p)`.
    Attractive,
    /// `λ₁(-Δ + W) ≥ ν(β̂)`.
    Repulsive,
}

#[derive(Debug, Clone)]
pub struct SpectralCertificate {
    pub kind: Bound,
    pub lambda1: f64,
    pub bound: f64,
    /// `bound - |λ₁|` or `λ₁ - bound`; nonnegative when the bound holds.
    pub gap: f64,
    /// `‖V‖_p` or `β̂`.
    pub potential_norm: f64,
    pub eigenfunction: GridFunction,
    /// Whether the bound came from the linear regime shortcut.
    pub linear_regime: bool,
}

impl SpectralCertificate {
    /// `1 + |λ₁|`, the scale of the one-sided tolerance.
    pub fn scale(&self) -> f64 {
        1.0 + self.lambda1.abs()
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.gap >= -tol * self.scale()
    }

    pub fn record(&self, e: &ExponentSet, seed: Option<u64>) -> CertificateRecord {
        let grid = self.eigenfunction.grid();
        CertificateRecord {
            schema_version: CERTIFICATE_SCHEMA_VERSION,
            kind: self.kind,
            lambda1: self.lambda1,
            bound: self.bound,
            gap: self.gap,
            potential_norm: self.potential_norm,
            manifold: grid.manifold().descriptor(),
            exponents: *e,
            grid_size: grid.n(),
            seed,
        }
    }
}

/// Serializable summary of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub schema_version: u32,
    pub kind: Bound,
    pub lambda1: f64,
    pub bound: f64,
    pub gap: f64,
    pub potential_norm: f64,
    pub manifold: ManifoldDescriptor,
    pub exponents: ExponentSet,
    pub grid_size: usize,
    pub seed: Option<u64>,
}

fn fixed_grid_options(grid: &Grid, opts: &SolverOptions) -> SolverOptions {
    SolverOptions { n: Some(grid.n()), ..opts.clone() }
}

/// Lowest eigenvalue of `-Δ - V` and its positive ground state.
pub fn lambda1_minus(v: &GridFunction) -> Result<(f64, GridFunction)> {
    let grid = v.grid();
    let (lam, x, _) = grid.potential_ground_state(&v.values, -1.0)?;
    Ok((lam, v.with_values(x)))
}

/// Lowest eigenvalue of `-Δ + W`.
pub fn lambda1_plus(w: &GridFunction) -> Result<(f64, GridFunction)> {
    let grid = w.grid();
    let (lam, x, _) = grid.potential_ground_state(&w.values, 1.0)?;
    Ok((lam, w.with_values(x)))
}

/// Certificate for `|λ₁(-Δ - V)| ≤ α(‖V‖_p)`, `V ≥ 0`.
pub fn check_thm2(e: &ExponentSet, v: &GridFunction, opts: &SolverOptions) -> Result<SpectralCertificate> {
    e.require_above_2()?;
    if v.values.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(SmlError::InvalidParameter("potential V must be nonnegative".into()));
    }
    if v.values.iter().all(|x| *x == 0.0) {
        return Err(SmlError::InvalidParameter("potential V must not vanish identically".into()));
    }
    let grid = v.grid();
    let mu = grid.lq_norm(&v.values, e.p_holder);
    let inversion = alpha_on_grid(grid, e, mu, known_lambda_star(grid.manifold()), &fixed_grid_options(grid, opts))?;
    let (lambda1, eigenfunction) = lambda1_minus(v)?;
    Ok(SpectralCertificate {
        kind: Bound::Attractive,
        lambda1,
        bound: inversion.alpha,
        gap: inversion.alpha - lambda1.abs(),
        potential_norm: mu,
        eigenfunction,
        linear_regime: inversion.fast_path,
    })
}

/// `V = μ u^{q-2}/‖u^{q-2}‖_p`: the potential saturating Hölder's inequality
/// against `u`, with `‖V‖_p = μ`.
pub fn optimal_potential_from_minimizer(u: &GridFunction, e: &ExponentSet, mu: f64) -> Result<GridFunction> {
    e.require_above_2()?;
    if u.values.iter().any(|x| !(*x > 0.0)) {
        return Err(SmlError::NotPositive("minimizer must be positive to build the saturating potential".into()));
    }
    let raw = u.map(|x| x.powf(e.q - 2.0));
    let norm = raw.grid().lq_norm(&raw.values, e.p_holder);
    Ok(raw.map(|x| mu * x / norm))
}

/// `‖V‖_p ‖u‖_q² - ∫V u²`, the defect in Hölder's inequality; zero iff
/// `V^{p-1} ∝ u²`. The common terms `‖∇u‖² + α‖u‖²` of the two sides cancel,
/// so `alpha` does not enter.
pub fn holder_gap(u: &GridFunction, v: &GridFunction, e: &ExponentSet, _alpha: f64) -> Result<f64> {
    e.require_above_2()?;
    let grid = u.grid();
    if grid.n() != v.grid().n() {
        return Err(SmlError::DimensionMismatch { expected: grid.n(), got: v.grid().n() });
    }
    let mu = grid.lq_norm(&v.values, e.p_holder);
    let vu2: f64 = grid.integrate(&v.values.iter().zip(&u.values).map(|(a, b)| a * b * b).collect::<Vec<_>>());
    Ok(mu * grid.lq_norm(&u.values, e.q).powi(2) - vu2)
}

/// Certificate for `λ₁(-Δ + W) ≥ ν(β̂)`, `W > 0`.
pub fn check_thm4(e: &ExponentSet, w: &GridFunction, opts: &SolverOptions) -> Result<SpectralCertificate> {
    e.require_below_2()?;
    if w.values.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(SmlError::NotPositive("potential W must be strictly positive".into()));
    }
    let grid = w.grid();
    let b = beta_hat(grid, &w.values, e.p_holder);
    let point = nu_on_grid(grid, e, b, &fixed_grid_options(grid, opts), None)?;
    let (lambda1, eigenfunction) = lambda1_plus(w)?;
    Ok(SpectralCertificate {
        kind: Bound::Repulsive,
        lambda1,
        bound: point.value,
        gap: lambda1 - point.value,
        potential_norm: b,
        eigenfunction,
        linear_regime: point.is_constant,
    })
}

/// Certificates for `count` seeded random nonnegative potentials of sizes in
/// `[0, max_scale]`, evaluated in parallel; deterministic in `seed`.
pub fn random_thm2_batch(grid: &Arc<Grid>, e: &ExponentSet, count: usize, max_scale: f64, seed: u64, opts: &SolverOptions) -> Result<Vec<SpectralCertificate>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = random::rng(seed.wrapping_add(i as u64));
            let scale = max_scale * rand::Rng::gen_range(&mut rng, 0.05..1.0);
            let v = random::random_nonnegative_potential(&mut rng, grid, 6, scale);
            check_thm2(e, &grid.function(v)?, opts)
        })
        .collect()
}

/// Certificates for `count` seeded random potentials with values in
/// `[floor, floor + spread]`.
pub fn random_thm4_batch(grid: &Arc<Grid>, e: &ExponentSet, count: usize, floor: f64, spread: f64, seed: u64, opts: &SolverOptions) -> Result<Vec<SpectralCertificate>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = random::rng(seed.wrapping_add(i as u64));
            let w = random::random_positive_potential(&mut rng, grid, 6, floor, spread);
            check_thm4(e, &grid.function(w)?, opts)
        })
        .collect()
}
