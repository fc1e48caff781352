//! Optimal interpolation constants.
//!
//! `μ(α) = min (‖∇u‖² + α‖u‖²)/‖u‖_q²` for `q > 2` and
//! `ν(β) = min (‖∇u‖² + β‖u‖_q²)/‖u‖²` for `1 < q < 2`, minimized over the
//! discrete meridian space. Both are infima of functions affine in the
//! parameter, hence concave and nondecreasing; the discrete versions inherit
//! this exactly on a fixed grid.
//!
//! `μ` is minimized on the `L^q` sphere by a Sobolev-preconditioned descent
//! (direction `u - E·A⁻¹(M u^{q-1})`, `A = K + αM`) and polished by Newton on
//! `A w = M w^{q-1}`. `ν` uses alternating minimization over the ground state
//! `u` of `K + MW` and the weight `W ∝ u^{q-2}` at fixed `β̂(W) = β`, which is
//! monotone and reduces every step to a linear eigenproblem.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::{Grid, GridFunction};
use crate::error::{Result, SmlError};
use crate::exponents::ExponentSet;
use crate::linalg::{lowest_generalized, SymTridiag};
use crate::manifold::{ManifoldDescriptor, ManifoldKind, ManifoldProfile};
use crate::random;

/// Two candidate minima closer than this (relative) are treated as a tie and
/// the constant one is reported.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// KKT residual below which a point counts as converged.
pub const KKT_TOLERANCE: f64 = 1e-7;

/// Relative spread `(max - min)/max` below which a minimizer is constant.
pub const CONSTANT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Mu,
    Nu,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Grid size; `None` picks [`resolution`] from the parameter.
    pub n: Option<usize>,
    pub random_inits: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { n: None, random_inits: 2, seed: 0, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub param: f64,
    pub value: f64,
    /// Normalized minimizer: `‖u‖_q = 1` for `μ`, `‖u‖₂ = 1` for `ν`.
    pub minimizer: GridFunction,
    pub n_inits: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub is_constant: bool,
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub which: Which,
    pub points: Vec<CurvePoint>,
    pub exponents: ExponentSet,
    pub manifold: ManifoldDescriptor,
}

/// Grid size resolving the concentration scale `α^{-1/2}` with 20 nodes.
pub fn resolution(m: &ManifoldProfile, alpha: f64) -> usize {
    let needed = (20.0 * alpha.max(0.0).sqrt() * m.domain_length).ceil() as usize;
    needed.max(800)
}

fn grid_for(m: &Arc<ManifoldProfile>, param: f64, opts: &SolverOptions) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid::new(m.clone(), opts.n.unwrap_or_else(|| resolution(m, param)))?))
}

fn is_constant(u: &[f64]) -> bool {
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo <= CONSTANT_TOLERANCE * hi.abs()
}

fn scale_to_lq(grid: &Grid, u: &mut [f64], q: f64) {
    let norm = grid.lq_norm(u, q);
    u.iter_mut().for_each(|v| *v = v.abs() / norm);
}

/// Initial guesses: the constant, a low harmonic, a bump of width `~α^{-1/2}`
/// shaped like the one-dimensional soliton, and random smooth positives.
fn initial_guesses(grid: &Grid, e: &ExponentSet, scale: f64, opts: &SolverOptions, warm: Option<&[f64]>) -> Vec<Vec<f64>> {
    let length = grid.manifold().domain_length;
    let periodic = grid.periodic();
    let mut inits = vec![vec![1.0; grid.n()]];
    let freq = if periodic { 2.0 } else { 1.0 } * std::f64::consts::PI / length;
    inits.push(grid.sample(|s| 1.0 + 0.5 * (freq * s).cos()));
    let centre = if periodic { 0.5 * length } else { 0.0 };
    let k = (e.q - 2.0).abs() / 2.0 * scale.max(1e-12).sqrt();
    let power = 2.0 / (e.q - 2.0).abs();
    inits.push(grid.sample(|s| 1e-3 + (1.0 / (k * (s - centre)).cosh()).powf(power)));
    let mut rng = random::rng(opts.seed);
    for _ in 0..opts.random_inits {
        inits.push(random::random_positive(&mut rng, grid, 6));
    }
    if let Some(w) = warm {
        if w.len() == grid.n() && w.iter().all(|v| v.is_finite()) {
            inits.push(w.to_vec());
        }
    }
    inits
}

/// `‖Au - μ M u^{q-1}‖ / ‖Au‖` in the dual norm `Σ F_j²/m_j`.
fn mu_el_residual(grid: &Grid, a: &SymTridiag, u: &[f64], q: f64, mu: f64) -> f64 {
    let au = a.matvec(u);
    let mass = grid.mass();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..u.len() {
        let f = au[j] - mu * mass[j] * u[j].abs().powf(q - 2.0) * u[j];
        num += f * f / mass[j];
        den += au[j] * au[j] / mass[j];
    }
    (num / den).sqrt()
}

struct Candidate {
    value: f64,
    u: Vec<f64>,
    residual: f64,
}

fn mu_descent(grid: &Grid, a: &SymTridiag, q: f64, u0: &[f64], max_iter: usize) -> Result<Candidate> {
    let mass = grid.mass();
    let mut u = u0.to_vec();
    scale_to_lq(grid, &mut u, q);
    let mut energy = a.quadratic_form(&u);
    let mut t = 1.0;
    let mut stalls = 0;
    for _ in 0..max_iter {
        let rhs: Vec<f64> = u.iter().zip(mass).map(|(v, m)| m * v.powf(q - 1.0)).collect();
        let g = a.solve(&rhs)?;
        let p: Vec<f64> = u.iter().zip(&g).map(|(v, gv)| v - energy * gv).collect();
        let p_norm2 = a.quadratic_form(&p);
        if p_norm2 <= 1e-24 * energy {
            break;
        }
        let mut accepted = false;
        while t > 1e-12 {
            let mut cand: Vec<f64> = u.iter().zip(&p).map(|(v, pv)| v - t * pv).collect();
            scale_to_lq(grid, &mut cand, q);
            let ec = a.quadratic_form(&cand);
            if ec < energy {
                stalls = if energy - ec <= 1e-15 * energy { stalls + 1 } else { 0 };
                u = cand;
                energy = ec;
                accepted = true;
                t = (2.0 * t).min(1.0);
                break;
            }
            t *= 0.5;
        }
        if !accepted || stalls >= 5 {
            break;
        }
    }
    let residual = mu_el_residual(grid, a, &u, q, energy);
    Ok(Candidate { value: energy, u, residual })
}

/// Newton on `A w = M w^{q-1}` from `w = E^{1/(q-2)} u`; returns the best
/// iterate, renormalized.
fn mu_newton(grid: &Grid, a: &SymTridiag, q: f64, start: &Candidate) -> Result<Candidate> {
    let mass = grid.mass();
    let mut w: Vec<f64> = start.u.iter().map(|v| v * start.value.powf(1.0 / (q - 2.0))).collect();
    let mut best = Candidate { value: start.value, u: start.u.clone(), residual: start.residual };
    let mut prev = f64::INFINITY;
    for it in 0..40 {
        let mut u = w.clone();
        scale_to_lq(grid, &mut u, q);
        let value = a.quadratic_form(&u);
        let residual = mu_el_residual(grid, a, &u, q, value);
        if residual < best.residual {
            best = Candidate { value, u, residual };
        }
        if residual < 1e-14 || (it > 2 && residual > 0.5 * prev) {
            break;
        }
        prev = residual;
        let aw = a.matvec(&w);
        let f: Vec<f64> = (0..w.len()).map(|j| aw[j] - mass[j] * w[j].powf(q - 1.0)).collect();
        let shift: Vec<f64> = (0..w.len()).map(|j| -(q - 1.0) * mass[j] * w[j].powf(q - 2.0)).collect();
        let delta = match a.add_diagonal(&shift).solve(&f) {
            Ok(d) => d,
            Err(_) => break,
        };
        let next: Vec<f64> = w.iter().zip(&delta).map(|(x, dx)| x - dx).collect();
        if next.iter().any(|x| !(*x > 0.0)) {
            break;
        }
        w = next;
    }
    Ok(best)
}

/// `μ(α)` on a given grid.
pub fn mu_on_grid(grid: &Arc<Grid>, e: &ExponentSet, alpha: f64, opts: &SolverOptions, warm: Option<&[f64]>) -> Result<CurvePoint> {
    e.require_above_2()?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(SmlError::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    let q = e.q;
    let ops = grid.operators();
    let a = ops.stiffness.add_diagonal(&ops.mass.iter().map(|m| alpha * m).collect::<Vec<_>>());
    let inits = initial_guesses(grid, e, alpha, opts, warm);
    let n_inits = inits.len();
    let mut constant = vec![1.0; grid.n()];
    scale_to_lq(grid, &mut constant, q);
    let constant_value = a.quadratic_form(&constant);
    let mut best = Candidate { value: constant_value, residual: mu_el_residual(grid, &a, &constant, q, constant_value), u: constant };
    let mut best_is_constant = true;
    for init in inits.iter().skip(1) {
        let c = mu_descent(grid, &a, q, init, opts.max_iter)?;
        let c = mu_newton(grid, &a, q, &c)?;
        let tie_limit = if best_is_constant { best.value * (1.0 - TIE_TOLERANCE) } else { best.value };
        if c.value < tie_limit && !is_constant(&c.u) {
            best = c;
            best_is_constant = false;
        }
    }
    let point = CurvePoint {
        param: alpha,
        value: best.value,
        converged: best.residual <= KKT_TOLERANCE,
        kkt_residual: best.residual,
        is_constant: best_is_constant || is_constant(&best.u),
        minimizer: grid.function(best.u)?,
        n_inits,
    };
    if !point.converged {
        return Err(SmlError::NoConvergence { what: "mu(alpha) minimization", iterations: opts.max_iter, residual: point.kkt_residual });
    }
    Ok(point)
}

/// `μ_M(α)` for the sharp inequality `‖∇u‖² + α‖u‖² ≥ μ ‖u‖_q²`.
pub fn mu_of_alpha(m: &Arc<ManifoldProfile>, e: &ExponentSet, alpha: f64, opts: &SolverOptions) -> Result<CurvePoint> {
    let grid = grid_for(m, alpha, opts)?;
    mu_on_grid(&grid, e, alpha, opts, None)
}

/// Rigidity constant usable for the linear fast paths: `λ₁` on spheres and
/// circles, where it equals `Λ_⋆`; unknown otherwise.
pub fn known_lambda_star(m: &ManifoldProfile) -> Option<f64> {
    match m.kind {
        ManifoldKind::Sphere | ManifoldKind::Circle => Some(m.lambda_one),
        ManifoldKind::Revolution => None,
    }
}

/// Result of inverting `μ(α)`.
#[derive(Debug, Clone)]
pub struct Inversion {
    pub alpha: f64,
    /// Minimizer at the returned `α`; `None` on the linear fast path.
    pub point: Option<CurvePoint>,
    pub fast_path: bool,
}

/// `α_M(μ)`, the inverse of `α ↦ μ(α)`, on a given grid.
///
/// `lambda` enables the fast path `α = μ/κ` for `μ ≤ κΛ/(q-2)`.
pub fn alpha_on_grid(grid: &Arc<Grid>, e: &ExponentSet, mu: f64, lambda: Option<f64>, opts: &SolverOptions) -> Result<Inversion> {
    e.require_above_2()?;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(SmlError::InvalidParameter(format!("mu = {mu} must be positive")));
    }
    let kappa = e.kappa(grid.volume());
    if let Some(l) = lambda {
        if mu <= e.linear_mu_threshold(kappa, l) {
            return Ok(Inversion { alpha: mu / kappa, point: None, fast_path: true });
        }
    }
    // μ(α) ≤ κα, so α(μ) ≥ μ/κ
    let mut lo = mu / kappa;
    let mut lo_pt = mu_on_grid(grid, e, lo, opts, None)?;
    if (lo_pt.value - mu).abs() <= 1e-13 * mu {
        return Ok(Inversion { alpha: lo, point: Some(lo_pt), fast_path: false });
    }
    let mut hi = 2.0 * lo;
    let mut hi_pt = mu_on_grid(grid, e, hi, opts, Some(&lo_pt.minimizer.values))?;
    let mut expansions = 0;
    while hi_pt.value < mu {
        lo = hi;
        lo_pt = hi_pt;
        hi *= 4.0;
        hi_pt = mu_on_grid(grid, e, hi, opts, Some(&lo_pt.minimizer.values))?;
        expansions += 1;
        if expansions > 60 {
            return Err(SmlError::BracketFailure(format!("mu = {mu} not reached up to alpha = {hi}")));
        }
    }
    // Illinois regula falsi on g(α) = μ(α) - μ
    let (mut g_lo, mut g_hi) = (lo_pt.value - mu, hi_pt.value - mu);
    let mut side = 0;
    let mut best = if g_hi.abs() < g_lo.abs() { hi_pt.clone() } else { lo_pt.clone() };
    for _ in 0..200 {
        let mid = if g_hi != g_lo { (lo * g_hi - hi * g_lo) / (g_hi - g_lo) } else { 0.5 * (lo + hi) };
        let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
        let warm = best.minimizer.values.clone();
        let pt = mu_on_grid(grid, e, mid, opts, Some(&warm))?;
        let g = pt.value - mu;
        if g.abs() < (best.value - mu).abs() {
            best = pt.clone();
        }
        if g.abs() <= 1e-12 * mu || (hi - lo) <= 1e-13 * hi {
            break;
        }
        if g < 0.0 {
            lo = mid;
            g_lo = g;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            g_hi = g;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(Inversion { alpha: best.param, point: Some(best), fast_path: false })
}

/// `α_M(μ)`; the grid is sized for the bracketed `α`.
pub fn alpha_of_mu(m: &Arc<ManifoldProfile>, e: &ExponentSet, mu: f64, opts: &SolverOptions) -> Result<f64> {
    let lambda = known_lambda_star(m);
    if opts.n.is_some() {
        let grid = grid_for(m, mu, opts)?;
        return Ok(alpha_on_grid(&grid, e, mu, lambda, opts)?.alpha);
    }
    let coarse = Arc::new(Grid::new(m.clone(), 800)?);
    let first = alpha_on_grid(&coarse, e, mu, lambda, opts)?;
    if first.fast_path || resolution(m, first.alpha) <= 800 {
        return Ok(first.alpha);
    }
    let grid = Arc::new(Grid::new(m.clone(), resolution(m, 1.5 * first.alpha))?);
    Ok(alpha_on_grid(&grid, e, mu, lambda, opts)?.alpha)
}

/// Relative residual of `Ku + β‖u‖_q^{2-q} M u^{q-1} = ν M u`.
fn nu_el_residual(grid: &Grid, k: &SymTridiag, u: &[f64], q: f64, beta: f64, nu: f64) -> f64 {
    let ku = k.matvec(u);
    let mass = grid.mass();
    let factor = beta * grid.lq_norm(u, q).powf(2.0 - q);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..u.len() {
        let nonlinear = factor * mass[j] * u[j].abs().powf(q - 1.0);
        let f = ku[j] + nonlinear - nu * mass[j] * u[j];
        num += f * f / mass[j];
        den += (nu * mass[j] * u[j]).powi(2) / mass[j];
    }
    (num / den).sqrt()
}

/// `W = c|u|^{q-2}` with `(∫W^{-p})^{-1/p} = β`.
fn weight_from(grid: &Grid, u: &[f64], e: &ExponentSet, beta: f64) -> Vec<f64> {
    let (q, p) = (e.q, e.p_holder);
    let raw: Vec<f64> = u.iter().map(|v| v.abs().max(1e-300).powf(q - 2.0)).collect();
    let b = beta_hat(grid, &raw, p);
    raw.iter().map(|w| w * beta / b).collect()
}

/// `β̂(W) = (∫W^{-p})^{-1/p}`.
pub fn beta_hat(grid: &Grid, w: &[f64], p: f64) -> f64 {
    grid.integrate(&w.iter().map(|x| x.powf(-p)).collect::<Vec<_>>()).powf(-1.0 / p)
}

fn nu_alternating(grid: &Grid, e: &ExponentSet, beta: f64, u0: &[f64], max_iter: usize) -> Result<Candidate> {
    let ops = grid.operators();
    let mut u: Vec<f64> = u0.iter().map(|v| v.abs()).collect();
    let mut nu_prev = f64::INFINITY;
    for _ in 0..max_iter {
        let w = weight_from(grid, &u, e, beta);
        let (lam, x, _) = lowest_generalized(&ops.schrodinger(&w, 1.0), &ops.mass)?;
        u = x.iter().map(|v| v.abs()).collect();
        if (nu_prev - lam).abs() <= 1e-11 * lam.abs().max(1e-300) {
            break;
        }
        nu_prev = lam;
    }
    let norm = grid.inner(&u, &u).sqrt();
    u.iter_mut().for_each(|v| *v /= norm);
    // report the quotient itself, which is the minimized quantity
    let value = ops.stiffness.quadratic_form(&u) + beta * grid.lq_norm(&u, e.q).powi(2);
    let residual = nu_el_residual(grid, &ops.stiffness, &u, e.q, beta, value);
    Ok(Candidate { value, u, residual })
}

/// Newton polish for `ν`: with `w = c·u` scaled so the Euler–Lagrange
/// equation reads `Kw + M w^{q-1} = ν M w`, the constraint is
/// `∫w^q = β^{q/(q-2)}`; the bordered tridiagonal system is solved by two
/// solves with `J = K + M((q-1)w^{q-2} - ν)`.
fn nu_newton(grid: &Grid, e: &ExponentSet, beta: f64, start: Candidate) -> Candidate {
    let q = e.q;
    let ops = grid.operators();
    let mass = grid.mass();
    let s_u = grid.integrate(&start.u.iter().map(|v| v.powf(q)).collect::<Vec<_>>());
    let c = (beta * s_u.powf((2.0 - q) / q)).powf(-1.0 / (2.0 - q));
    let mut w: Vec<f64> = start.u.iter().map(|v| c * v).collect();
    let mut nu = start.value;
    let target = beta.powf(q / (q - 2.0));
    let mut best = start;
    let mut prev = f64::INFINITY;
    for it in 0..40 {
        let norm = grid.inner(&w, &w).sqrt();
        let u: Vec<f64> = w.iter().map(|v| v / norm).collect();
        let value = ops.stiffness.quadratic_form(&u) + beta * grid.lq_norm(&u, q).powi(2);
        let residual = nu_el_residual(grid, &ops.stiffness, &u, q, beta, value);
        if residual < best.residual {
            best = Candidate { value, u, residual };
        }
        if residual < 1e-14 || (it > 2 && residual > 0.5 * prev) {
            break;
        }
        prev = residual;
        let kw = ops.stiffness.matvec(&w);
        let f: Vec<f64> = (0..w.len()).map(|j| kw[j] + mass[j] * (w[j].powf(q - 1.0) - nu * w[j])).collect();
        let h = grid.integrate(&w.iter().map(|v| v.powf(q)).collect::<Vec<_>>()) - target;
        // sublinear absorption drives the minimizer to (numerically) zero on
        // dead cores; the floor keeps the Jacobian finite there
        let shift: Vec<f64> = (0..w.len()).map(|j| mass[j] * ((q - 1.0) * w[j].max(1e-300).powf(q - 2.0) - nu)).collect();
        let jac = ops.stiffness.add_diagonal(&shift);
        let mw: Vec<f64> = w.iter().zip(mass).map(|(v, m)| v * m).collect();
        let (x1, x2) = match (jac.solve(&f), jac.solve(&mw)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => break,
        };
        let grad: Vec<f64> = w.iter().zip(mass).map(|(v, m)| q * m * v.powf(q - 1.0)).collect();
        let g1: f64 = grad.iter().zip(&x1).map(|(a, b)| a * b).sum();
        let g2: f64 = grad.iter().zip(&x2).map(|(a, b)| a * b).sum();
        if g2 == 0.0 {
            break;
        }
        let dnu = (g1 - h) / g2;
        w = (0..w.len())
            .map(|j| {
                let v = w[j] - x1[j] + dnu * x2[j];
                if v > 0.0 { v } else { 0.1 * w[j] }
            })
            .collect();
        nu += dnu;
    }
    best
}

/// `ν(β)` on a given grid.
pub fn nu_on_grid(grid: &Arc<Grid>, e: &ExponentSet, beta: f64, opts: &SolverOptions, warm: Option<&[f64]>) -> Result<CurvePoint> {
    e.require_below_2()?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(SmlError::InvalidParameter(format!("beta = {beta} must be positive")));
    }
    let ops = grid.operators();
    let inits = initial_guesses(grid, e, beta.powf(e.p_holder / (e.p_holder + e.d as f64 / 2.0)), opts, warm);
    let n_inits = inits.len();
    let vol = grid.volume();
    let constant = vec![1.0 / vol.sqrt(); grid.n()];
    let constant_value = beta * grid.lq_norm(&constant, e.q).powi(2);
    let mut best = Candidate {
        value: constant_value,
        residual: nu_el_residual(grid, &ops.stiffness, &constant, e.q, beta, constant_value),
        u: constant,
    };
    let mut best_is_constant = true;
    for init in inits.iter().skip(1) {
        let c = nu_alternating(grid, e, beta, init, opts.max_iter.min(2000))?;
        let c = nu_newton(grid, e, beta, c);
        let tie_limit = if best_is_constant { best.value * (1.0 - TIE_TOLERANCE) } else { best.value };
        if c.value < tie_limit && !is_constant(&c.u) {
            best = c;
            best_is_constant = false;
        }
    }
    let point = CurvePoint {
        param: beta,
        value: best.value,
        converged: best.residual <= KKT_TOLERANCE,
        kkt_residual: best.residual,
        is_constant: best_is_constant || is_constant(&best.u),
        minimizer: grid.function(best.u)?,
        n_inits,
    };
    if !point.converged {
        return Err(SmlError::NoConvergence { what: "nu(beta) minimization", iterations: opts.max_iter, residual: point.kkt_residual });
    }
    Ok(point)
}

/// `ν(β)` for `‖∇u‖² + β‖u‖_q² ≥ ν ‖u‖²`, `1 < q < 2`.
pub fn nu_of_beta(m: &Arc<ManifoldProfile>, e: &ExponentSet, beta: f64, opts: &SolverOptions) -> Result<CurvePoint> {
    let scale = beta.powf(e.p_holder / (e.p_holder + e.d as f64 / 2.0));
    let grid = grid_for(m, scale, opts)?;
    nu_on_grid(&grid, e, beta, opts, None)
}

/// Warm-started sweep over ascending parameters on one grid, checked for
/// monotonicity and concavity.
pub fn curve_sweep(m: &Arc<ManifoldProfile>, e: &ExponentSet, params: &[f64], which: Which, opts: &SolverOptions) -> Result<Curve> {
    if params.is_empty() {
        return Err(SmlError::InvalidParameter("empty parameter list".into()));
    }
    if params.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SmlError::InvalidParameter("parameters must be strictly ascending".into()));
    }
    let top = *params.last().unwrap();
    let scale = match which {
        Which::Mu => top,
        Which::Nu => top.powf(e.p_holder / (e.p_holder + e.d as f64 / 2.0)),
    };
    let grid = grid_for(m, scale, opts)?;
    let mut points: Vec<CurvePoint> = Vec::with_capacity(params.len());
    for &param in params {
        let warm = points.last().map(|p| p.minimizer.values.clone());
        let pt = match which {
            Which::Mu => mu_on_grid(&grid, e, param, opts, warm.as_deref())?,
            Which::Nu => nu_on_grid(&grid, e, param, opts, warm.as_deref())?,
        };
        points.push(pt);
    }
    let curve = Curve { which, points, exponents: *e, manifold: m.descriptor() };
    curve.validate()?;
    Ok(curve)
}

impl Curve {
    /// Monotone nondecreasing and concave (slopes nonincreasing), with
    /// tolerance `10⁻⁶` relative to the largest value.
    pub fn validate(&self) -> Result<()> {
        let scale = self.points.iter().map(|p| p.value.abs()).fold(1e-300, f64::max);
        let tol = 1e-6 * scale;
        for w in self.points.windows(2) {
            if w[1].value < w[0].value - tol {
                return Err(SmlError::CurveInvariant(format!(
                    "decrease between ({}, {}) and ({}, {})",
                    w[0].param, w[0].value, w[1].param, w[1].value
                )));
            }
        }
        for w in self.points.windows(3) {
            let s0 = (w[1].value - w[0].value) / (w[1].param - w[0].param);
            let s1 = (w[2].value - w[1].value) / (w[2].param - w[1].param);
            let span = w[2].param - w[0].param;
            if (s1 - s0) * span > tol {
                return Err(SmlError::CurveInvariant(format!(
                    "concavity violated at params ({}, {}, {}) values ({}, {}, {})",
                    w[0].param, w[1].param, w[2].param, w[0].value, w[1].value, w[2].value
                )));
            }
        }
        Ok(())
    }

    /// CSV with header
    /// `param,value,kkt_residual,n_inits,minimizer_max,minimizer_min,is_constant,converged`;
    /// `is_constant` flags the linear regime.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| SmlError::Io(e.to_string());
        w.write_record(["param", "value", "kkt_residual", "n_inits", "minimizer_max", "minimizer_min", "is_constant", "converged"]).map_err(io)?;
        for p in &self.points {
            w.write_record([
                format!("{:.17e}", p.param),
                format!("{:.17e}", p.value),
                format!("{:.6e}", p.kkt_residual),
                p.n_inits.to_string(),
                format!("{:.17e}", p.minimizer.max()),
                format!("{:.17e}", p.minimizer.min()),
                p.is_constant.to_string(),
                p.converged.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}
