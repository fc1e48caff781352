//! Curvature threshold `Λ_⋆` and the rigidity of `-Δv + λ/(q-2)(v - v^{q-1}) = 0`.
//!
//! For axisymmetric `u` the corrected Hessian `Q_g u` is diagonal in the frame
//! (meridian, orbit, ..., orbit) with entries `(d-1)/d·X` and `-X/d`, where
//! `X = u'' - (f'/f)u' - c u'²/u`; hence `θd/(d-1)‖Q_g u‖² = θX²`.
//!
//! Positive solutions of the elliptic equation are searched by deflated
//! Newton: known roots `r` (always `0` and `1`) are removed by the factor
//! `Π (1/‖v - r‖² + 1)`, so repeated starts converge to new solutions.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{Grid, GridFunction};
use crate::error::{Result, SmlError};
use crate::exponents::ExponentSet;
use crate::linalg::{generalized_pair, SymTridiag};
use crate::manifold::ManifoldDescriptor;
use crate::random;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Newton residual below which a solution is accepted.
pub const NEWTON_TOLERANCE: f64 = 1e-9;
/// `‖v - 1‖_∞` below which a solution counts as the constant.
pub const CONSTANT_TOLERANCE: f64 = 1e-6;
/// Sup distance above which two solutions are distinct.
pub const DISTINCT_TOLERANCE: f64 = 1e-4;

/// Corrected Hessian at one node, in the orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QTensorSample {
    pub s: f64,
    /// `u''`.
    pub hess_meridian: f64,
    /// `(f'/f) u'`, repeated on each of the `d-1` orbit directions.
    pub hess_orbit: f64,
    /// `u'' + (d-1)(f'/f)u'`.
    pub laplacian: f64,
    /// Trace-free part of `c ∇u⊗∇u/u`, meridian entry.
    pub correction_meridian: f64,
    pub correction_orbit: f64,
    pub q_meridian: f64,
    pub q_orbit: f64,
    /// `‖Q_g u‖²`.
    pub q_norm2: f64,
}

impl QTensorSample {
    /// `Q_mm + (d-1) Q_oo`.
    pub fn trace(&self, d: usize) -> f64 {
        self.q_meridian + (d as f64 - 1.0) * self.q_orbit
    }
}

fn orbit_slopes(grid: &Grid) -> Vec<f64> {
    grid.nodes().iter().map(|s| grid.manifold().orbit_log_slope(*s)).collect()
}

/// Pointwise corrected Hessian of a positive axisymmetric `u`.
pub fn q_tensor_samples(e: &ExponentSet, u: &GridFunction) -> Result<Vec<QTensorSample>> {
    if !u.is_positive() {
        return Err(SmlError::NotPositive("corrected Hessian divides by u".into()));
    }
    let grid = u.grid();
    let d = grid.manifold().d as f64;
    let c = e.q_tensor_coefficient();
    let du = grid.nodal_derivative(&u.values);
    let d2u = grid.nodal_second_derivative(&u.values);
    let slopes = orbit_slopes(grid);
    Ok((0..grid.n())
        .map(|j| {
            let hm = d2u[j];
            let ho = slopes[j] * du[j];
            let lap = hm + (d - 1.0) * ho;
            let g2 = du[j] * du[j] / u.values[j];
            let cm = c * (g2 - g2 / d);
            let co = -c * g2 / d;
            let qm = hm - lap / d - cm;
            let qo = ho - lap / d - co;
            QTensorSample {
                s: grid.nodes()[j],
                hess_meridian: hm,
                hess_orbit: ho,
                laplacian: lap,
                correction_meridian: cm,
                correction_orbit: co,
                q_meridian: qm,
                q_orbit: qo,
                q_norm2: qm * qm + (d - 1.0) * qo * qo,
            }
        })
        .collect())
}

/// `∫(Δu)² = (Ku)ᵀ M⁻¹ (Ku)`.
fn laplacian_energy(grid: &Grid, u: &[f64]) -> f64 {
    let ku = grid.stiffness_apply(u);
    ku.iter().zip(grid.mass()).map(|(k, m)| k * k / m).sum()
}

/// `∫ Ric(∇u, ∇u)` with gradients on the faces.
fn ricci_energy(grid: &Grid, u: &[f64]) -> f64 {
    let h = grid.h();
    grid.face_gradients(u)
        .iter()
        .enumerate()
        .map(|(j, (g, w))| w * h * grid.manifold().ricci_meridian(grid.face_position(j)) * g * g)
        .sum()
}

/// The `Λ_⋆` quotient
/// `[(1-θ)∫(Δu)² + θd/(d-1) ∫(‖Q_g u‖² + Ric(∇u,∇u))] / ∫|∇u|²`
/// for positive nonconstant `u`; `θ = 0` drops the second term (`d = 1`).
pub fn lambda_star_quotient(e: &ExponentSet, u: &GridFunction) -> Result<f64> {
    let grid = u.grid();
    if !u.is_positive() {
        return Err(SmlError::NotPositive("the quotient divides by u".into()));
    }
    let denom = grid.dirichlet(&u.values);
    let scale = u.values.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if denom <= 1e-28 * scale * scale * grid.volume() {
        return Err(SmlError::InvalidParameter("the quotient is undefined for constant u".into()));
    }
    let theta = e.theta_rigidity;
    let mut num = (1.0 - theta) * laplacian_energy(grid, &u.values);
    if theta > 0.0 {
        let d = grid.manifold().d as f64;
        let q = q_tensor_samples(e, u)?;
        let qn: f64 = q.iter().zip(grid.mass()).map(|(s, m)| m * s.q_norm2).sum();
        num += theta * d / (d - 1.0) * (qn + ricci_energy(grid, &u.values));
    }
    Ok(num / denom)
}

/// The linearized (`ε → 0`) quotient at direction `v`. Along `u = 1 + εv` the
/// gradient correction is `O(ε²)`, and the Bochner identity
/// `∫(Δv)² = ∫|∇²v|² + ∫Ric(∇v,∇v)` turns the numerator into `∫(Δv)²`,
/// so the limit is `∫(Δv)² / ∫|∇v|²` for every `θ`.
pub fn lambda_star_linearized(v: &GridFunction) -> Result<f64> {
    let grid = v.grid();
    let denom = grid.dirichlet(&v.values);
    if !(denom > 0.0) {
        return Err(SmlError::InvalidParameter("direction must be nonconstant".into()));
    }
    Ok(laplacian_energy(grid, &v.values) / denom)
}

/// Trial directions: low meridian harmonics and the first discrete eigenvectors.
fn harmonic_basis(grid: &Grid, modes: usize) -> Result<Vec<Vec<f64>>> {
    let length = grid.manifold().domain_length;
    let mut basis = Vec::new();
    if grid.periodic() {
        let k0 = 2.0 * std::f64::consts::PI / length;
        for k in 1..=modes {
            basis.push(grid.sample(|s| (k0 * k as f64 * s).cos()));
            basis.push(grid.sample(|s| (k0 * k as f64 * s).sin()));
        }
    } else {
        let k0 = std::f64::consts::PI / length;
        for k in 1..=modes {
            basis.push(grid.sample(|s| (k0 * k as f64 * s).cos()));
        }
    }
    let ops = grid.operators();
    for k in 2..=3 {
        basis.push(generalized_pair(&ops.stiffness, &ops.mass, k)?.1);
    }
    Ok(basis)
}

/// Outcome of the `Λ_⋆` search; `value` is an upper bound within the
/// axisymmetric class.
#[derive(Debug, Clone)]
pub struct LambdaStarSearch {
    pub value: f64,
    pub linearized: f64,
    pub nonlinear: f64,
    pub evaluations: usize,
}

/// Upper bound on `Λ_⋆` over axisymmetric positive functions: the linearized
/// limit plus `search_budget` nonlinear trials (harmonic
/// and bump families at decreasing amplitude, random smooth positives),
/// refined by amplitude scaling around the best trial.
pub fn lambda_star_upper_bound(grid: &Arc<Grid>, e: &ExponentSet, search_budget: usize, seed: u64) -> Result<LambdaStarSearch> {
    let basis = harmonic_basis(grid, 12)?;
    // the linearized quotient is minimized by the first eigenvector
    let ops = grid.operators();
    let (_, dir, _) = generalized_pair(&ops.stiffness, &ops.mass, 1)?;
    let linearized = lambda_star_linearized(&grid.function(dir.clone())?)?;
    let mut trials: Vec<Vec<f64>> = Vec::new();
    let unit = |v: &[f64]| {
        let s = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        v.iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let mut directions = vec![unit(&dir)];
    directions.extend(basis.iter().take(4).map(|b| unit(b)));
    let length = grid.manifold().domain_length;
    for centre in [0.0, 0.25 * length, 0.5 * length] {
        let width = 0.15 * length;
        directions.push(grid.sample(|s| (-((s - centre) / width).powi(2)).exp()));
    }
    let amplitudes = [0.5, 0.2, 0.05, 1e-2, 1e-3];
    let mut rng = random::rng(seed);
    let mut k = 0;
    while trials.len() < search_budget {
        if k < directions.len() * amplitudes.len() {
            let (di, ai) = (k / amplitudes.len(), k % amplitudes.len());
            let a = amplitudes[ai];
            trials.push(directions[di].iter().map(|x| 1.0 + a * x).collect());
            for sign in [-1.0] {
                if trials.len() < search_budget {
                    trials.push(directions[di].iter().map(|x| 1.0 + sign * a * x).collect());
                }
            }
        } else {
            trials.push(random::random_positive(&mut rng, grid, 8));
        }
        k += 1;
    }
    let values: Vec<(f64, usize)> = trials
        .par_iter()
        .enumerate()
        .filter_map(|(i, t)| grid.function(t.clone()).ok().and_then(|u| lambda_star_quotient(e, &u).ok()).map(|v| (v, i)))
        .collect();
    let mut evaluations = values.len();
    let mut nonlinear = f64::INFINITY;
    let mut best_idx = None;
    for (v, i) in values {
        if v < nonlinear {
            nonlinear = v;
            best_idx = Some(i);
        }
    }
    // amplitude refinement around the best trial
    if let Some(i) = best_idx {
        let base = &trials[i];
        let mean = grid.integrate(base) / grid.volume();
        let osc: Vec<f64> = base.iter().map(|x| x - mean).collect();
        for factor in [0.5, 0.8, 1.25, 1.6] {
            let t: Vec<f64> = osc.iter().map(|x| mean + factor * x).collect();
            if t.iter().all(|x| *x > 0.0) {
                if let Ok(v) = lambda_star_quotient(e, &grid.function(t)?) {
                    evaluations += 1;
                    nonlinear = nonlinear.min(v);
                }
            }
        }
    }
    Ok(LambdaStarSearch { value: linearized.min(nonlinear), linearized, nonlinear, evaluations })
}

/// A positive solution found by the scan.
#[derive(Debug, Clone)]
pub struct FoundSolution {
    pub solution: GridFunction,
    pub residual: f64,
    pub is_constant: bool,
}

#[derive(Debug, Clone)]
pub struct RigidityReport {
    pub lambda: f64,
    pub solutions_found: Vec<FoundSolution>,
    pub n_inits: usize,
    pub newton_iters: usize,
    /// Starts that did not converge to a positive solution.
    pub failures: usize,
}

impl RigidityReport {
    pub fn nonconstant(&self) -> impl Iterator<Item = &FoundSolution> {
        self.solutions_found.iter().filter(|s| !s.is_constant)
    }

    pub fn only_constants(&self) -> bool {
        self.nonconstant().next().is_none()
    }

    pub fn record(&self, manifold: ManifoldDescriptor, e: &ExponentSet, seed: u64) -> RigidityRecord {
        RigidityRecord {
            schema_version: REPORT_SCHEMA_VERSION,
            lambda: self.lambda,
            manifold,
            exponents: *e,
            seed,
            n_inits: self.n_inits,
            newton_iters: self.newton_iters,
            failures: self.failures,
            solutions: self
                .solutions_found
                .iter()
                .map(|s| SolutionRecord {
                    residual: s.residual,
                    is_constant: s.is_constant,
                    min: s.solution.min(),
                    max: s.solution.max(),
                    nodes: s.solution.grid().nodes().to_vec(),
                    values: s.solution.values.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub residual: f64,
    pub is_constant: bool,
    pub min: f64,
    pub max: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityRecord {
    pub schema_version: u32,
    pub lambda: f64,
    pub manifold: ManifoldDescriptor,
    pub exponents: ExponentSet,
    pub seed: u64,
    pub n_inits: usize,
    pub newton_iters: usize,
    pub failures: usize,
    pub solutions: Vec<SolutionRecord>,
}

impl RigidityRecord {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| SmlError::Io(e.to_string()))
    }
}

struct EllipticProblem<'a> {
    grid: &'a Grid,
    coeff: f64,
    q: f64,
}

impl EllipticProblem<'_> {
    /// `Kv + λ/(q-2) M(v - |v|^{q-2}v)`.
    fn residual(&self, v: &[f64]) -> Vec<f64> {
        let kv = self.grid.stiffness_apply(v);
        kv.iter()
            .zip(v)
            .zip(self.grid.mass())
            .map(|((k, x), m)| k + self.coeff * m * (x - x.abs().powf(self.q - 2.0) * x))
            .collect()
    }

    fn jacobian(&self, v: &[f64]) -> SymTridiag {
        let shift: Vec<f64> = v
            .iter()
            .zip(self.grid.mass())
            .map(|(x, m)| self.coeff * m * (1.0 - (self.q - 1.0) * x.abs().powf(self.q - 2.0)))
            .collect();
        self.grid.stiffness().add_diagonal(&shift)
    }

    /// Pointwise residual `‖M⁻¹F‖_∞`, relative to the size of the nonlinear terms.
    fn relative_residual(&self, v: &[f64]) -> f64 {
        let f = self.residual(v);
        let sup = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let scale = self.coeff.abs() * sup.max(sup.powf(self.q - 1.0)).max(1e-300);
        f.iter().zip(self.grid.mass()).map(|(x, m)| (x / m).abs()).fold(0.0, f64::max) / scale
    }
}

fn m_dist2(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.mass().iter().zip(a).zip(b).map(|((m, x), y)| m * (x - y) * (x - y)).sum()
}

/// `∇ log Π(1/‖v - r‖² + 1)` and the deflation factor itself.
fn deflation(grid: &Grid, v: &[f64], roots: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let mut g = vec![0.0; v.len()];
    let mut factor = 1.0;
    for r in roots {
        let d2 = m_dist2(grid, v, r).max(1e-300);
        factor *= 1.0 / d2 + 1.0;
        let c = -2.0 / (d2 * (d2 + 1.0));
        for j in 0..v.len() {
            g[j] += c * grid.mass()[j] * (v[j] - r[j]);
        }
    }
    (g, factor)
}

fn deflated_newton(p: &EllipticProblem, v0: &[f64], roots: &[Vec<f64>], max_iter: usize) -> (Option<Vec<f64>>, usize) {
    let grid = p.grid;
    let mut v = v0.to_vec();
    let norm = |f: &[f64]| f.iter().zip(grid.mass()).map(|(x, m)| x * x / m).sum::<f64>().sqrt();
    for it in 0..max_iter {
        if p.relative_residual(&v) <= 0.1 * NEWTON_TOLERANCE {
            return (Some(v), it);
        }
        let f = p.residual(&v);
        let delta = match p.jacobian(&v).solve(&f) {
            Ok(d) => d,
            Err(_) => return (None, it),
        };
        let delta: Vec<f64> = delta.iter().map(|x| -x).collect();
        let (g, factor) = deflation(grid, &v, roots);
        let gd: f64 = g.iter().zip(&delta).map(|(a, b)| a * b).sum();
        let scale = 1.0 - gd;
        let step: Vec<f64> = if scale.abs() > 1e-12 { delta.iter().map(|x| x / scale).collect() } else { delta };
        let merit = factor * norm(&f);
        let mut tau = 1.0;
        let mut next = v.clone();
        for _ in 0..6 {
            next = v.iter().zip(&step).map(|(x, s)| x + tau * s).collect();
            let (_, fac) = deflation(grid, &next, roots);
            if fac * norm(&p.residual(&next)) < merit {
                break;
            }
            tau *= 0.5;
        }
        if next.iter().any(|x| !x.is_finite()) || next.iter().fold(0.0f64, |a, b| a.max(b.abs())) > 1e6 {
            return (None, it);
        }
        v = next;
    }
    let ok = p.relative_residual(&v) <= NEWTON_TOLERANCE;
    (if ok { Some(v) } else { None }, max_iter)
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Distance modulo the reflection `s ↦ L - s` of pole-closed meridians.
fn distance_mod_reflection(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let direct = sup_distance(a, b);
    if grid.periodic() {
        return direct;
    }
    let reflected: Vec<f64> = b.iter().rev().copied().collect();
    direct.min(sup_distance(a, &reflected))
}

/// Starting points for the scan: harmonic perturbations of `1`, random
/// smooth positives and an optional continuation guess.
fn scan_inits(grid: &Grid, n_inits: usize, seed: u64, continuation: Option<&[f64]>) -> Vec<Vec<f64>> {
    let length = grid.manifold().domain_length;
    let k0 = if grid.periodic() { 2.0 } else { 1.0 } * std::f64::consts::PI / length;
    let mut inits = Vec::with_capacity(n_inits);
    if let Some(c) = continuation {
        inits.push(c.to_vec());
    }
    let mut rng = random::rng(seed);
    let mut k = 0usize;
    while inits.len() < n_inits {
        if k < 12 {
            let mode = (k / 4 + 1) as f64;
            let amp = [0.3, -0.3, 0.1, -0.1][k % 4];
            inits.push(grid.sample(|s| 1.0 + amp * (k0 * mode * s).cos()));
        } else {
            let base = rand::Rng::gen_range(&mut rng, 0.5..1.5);
            inits.push(random::random_positive(&mut rng, grid, 6).into_iter().map(|x| base * x).collect());
        }
        k += 1;
    }
    inits
}

/// Scan for positive solutions of `-Δv + λ/(q-2)(v - v^{q-1}) = 0`.
///
/// Starts run in parallel without deflating each other's finds; a second
/// sequential pass deflates everything found so far from the starts that
/// only reproduced known roots.
pub fn rigidity_scan(grid: &Arc<Grid>, e: &ExponentSet, lambda: f64, n_inits: usize, seed: u64, continuation: Option<&[f64]>) -> Result<RigidityReport> {
    if !(lambda > 0.0) {
        return Err(SmlError::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    let n = grid.n();
    let problem = EllipticProblem { grid, coeff: lambda / (e.q - 2.0), q: e.q };
    let one = vec![1.0; n];
    let base_roots = vec![vec![0.0; n], one.clone()];
    let inits = scan_inits(grid, n_inits.max(1), seed, continuation);
    let outcomes: Vec<(Option<Vec<f64>>, usize)> = inits.par_iter().map(|v0| deflated_newton(&problem, v0, &base_roots, 100)).collect();

    let mut solutions = vec![FoundSolution { solution: grid.function(one.clone())?, residual: problem.relative_residual(&one), is_constant: true }];
    let mut roots = base_roots.clone();
    let mut newton_iters: usize = outcomes.iter().map(|o| o.1).sum();
    let mut failures = 0;
    let accept = |v: Vec<f64>, solutions: &mut Vec<FoundSolution>, roots: &mut Vec<Vec<f64>>| -> Result<bool> {
        if v.iter().any(|x| !(*x > 0.0)) {
            return Ok(false);
        }
        let constant = sup_distance(&v, &one) <= CONSTANT_TOLERANCE;
        if solutions.iter().any(|s| distance_mod_reflection(grid, &s.solution.values, &v) <= DISTINCT_TOLERANCE) {
            return Ok(true);
        }
        let residual = problem.relative_residual(&v);
        roots.push(v.clone());
        solutions.push(FoundSolution { solution: grid.function(v)?, residual, is_constant: constant });
        Ok(true)
    };
    let mut retry = Vec::new();
    for (i, (found, _)) in outcomes.into_iter().enumerate() {
        match found {
            Some(v) => {
                if !accept(v, &mut solutions, &mut roots)? {
                    failures += 1;
                }
            }
            None => retry.push(i),
        }
    }
    // deflate what was found and retry the failed starts once
    if roots.len() > base_roots.len() {
        let mut still_failed = 0;
        for i in retry {
            let (found, its) = deflated_newton(&problem, &inits[i], &roots, 100);
            newton_iters += its;
            match found {
                Some(v) => {
                    if !accept(v, &mut solutions, &mut roots)? {
                        still_failed += 1;
                    }
                }
                None => still_failed += 1,
            }
        }
        failures += still_failed;
    } else {
        failures += retry.len();
    }
    Ok(RigidityReport { lambda, solutions_found: solutions, n_inits: inits.len(), newton_iters, failures })
}

/// Bisection for the operational `Λ`: the supremum of `λ` at which the scan
/// finds only constants. Returns the final bracket `(lo, hi)`.
pub fn bisect_lambda(grid: &Arc<Grid>, e: &ExponentSet, lo: f64, hi: f64, width: f64, n_inits: usize, seed: u64) -> Result<(f64, f64)> {
    let lo_report = rigidity_scan(grid, e, lo, n_inits, seed, None)?;
    if !lo_report.only_constants() {
        return Err(SmlError::BracketFailure(format!("nonconstant solution already at lambda = {lo}")));
    }
    let hi_report = rigidity_scan(grid, e, hi, n_inits, seed, None)?;
    let mut branch = hi_report.nonconstant().next().map(|s| s.solution.values.clone()).ok_or_else(|| {
        SmlError::BracketFailure(format!("no nonconstant solution at lambda = {hi}"))
    })?;
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let r = rigidity_scan(grid, e, mid, n_inits, seed, Some(&branch))?;
        let found = r.nonconstant().next().map(|s| s.solution.values.clone());
        match found {
            Some(v) => {
                branch = v;
                hi = mid;
            }
            None => lo = mid,
        }
    }
    Ok((lo, hi))
}

/// `‖∇v‖² - Λ/(q-2)[κ‖v‖_q² - ‖v‖₂²]`, nonnegative when `Λ` is admissible.
pub fn interpolation_defect(v: &GridFunction, e: &ExponentSet, lambda: f64) -> f64 {
    let g = v.grid();
    let kappa = e.kappa(g.volume());
    g.dirichlet(&v.values) - lambda / (e.q - 2.0) * (kappa * g.lq_norm(&v.values, e.q).powi(2) - g.inner(&v.values, &v.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::build_exponents;
    use crate::manifold::{make_circle, make_sphere};
    use std::f64::consts::PI;

    fn grid(m: crate::manifold::ManifoldProfile, n: usize) -> Arc<Grid> {
        Arc::new(Grid::new(Arc::new(m), n).unwrap())
    }

    #[test]
    fn circle_single_harmonic() {
        let g = grid(make_circle(2.0 * PI).unwrap(), 4000);
        let e = build_exponents(1, 4.0).unwrap();
        let u = g.from_fn(|s| 2.0 + s.cos());
        let v = lambda_star_quotient(&e, &u).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn sphere_first_and_second_harmonic() {
        let g = grid(make_sphere(2).unwrap(), 800);
        let e = build_exponents(2, 4.0).unwrap();
        let v1 = lambda_star_quotient(&e, &g.from_fn(|s| 2.0 + 1e-3 * s.cos())).unwrap();
        assert!((v1 - 2.0).abs() < 1e-3, "{v1}");
        let p2 = |s: f64| 0.5 * (3.0 * s.cos().powi(2) - 1.0);
        let v2 = lambda_star_quotient(&e, &g.from_fn(|s| 2.0 + 1e-3 * p2(s))).unwrap();
        assert!(v2 > 2.5, "{v2}");
        // linearized limit on P₂ is its eigenvalue 6
        let l2 = lambda_star_linearized(&g.from_fn(p2)).unwrap();
        assert!((l2 - 6.0).abs() < 1e-2, "{l2}");
    }

    #[test]
    fn q_tensor_trace_free() {
        let g = grid(make_sphere(2).unwrap(), 300);
        let e = build_exponents(2, 3.0).unwrap();
        let u = g.from_fn(|s| 1.5 + 0.4 * s.cos() + 0.2 * (3.0 * s).cos());
        for sample in q_tensor_samples(&e, &u).unwrap() {
            assert!(sample.trace(2).abs() <= 1e-8 * (1.0 + sample.laplacian.abs()));
        }
        assert!(lambda_star_quotient(&e, &g.constant(1.0)).is_err());
        assert!(lambda_star_quotient(&e, &g.from_fn(|s| s.cos())).is_err());
    }

    #[test]
    fn newton_residual_of_constant_is_zero() {
        let g = grid(make_sphere(2).unwrap(), 100);
        let p = EllipticProblem { grid: &g, coeff: 2.2 / 2.0, q: 4.0 };
        assert_eq!(p.relative_residual(&vec![1.0; 100]), 0.0);
    }
}
