//! Nonlinear flow `u_t = u^{2-2β}(Δu + (1+β(q-2))|∇u|²/u)` and its Lyapunov
//! functional.
//!
//! With `ρ = u^{βq}` and `k = 2 + β(q-2)` the flow is the porous-medium type
//! equation `ρ_t = (βq/k) Δ(ρ^m)`, `m = k/(βq)`. It is stepped in that
//! conservative form with a linearly implicit Euler scheme
//!
//! `(M + dt c K D) ρ⁺ = Mρ - dt c K(ρ^m - Dρ)`, `D = diag(m ρ^{m-1})`,
//!
//! so `∫u^{βq}` is conserved to roundoff.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discretization::GridFunction;
use crate::error::{Result, SmlError};
use crate::exponents::ExponentSet;
use crate::linalg::Tridiag;

/// Largest accepted relative change of `ρ` in one step.
pub const MAX_RELATIVE_CHANGE: f64 = 0.1;
/// Growth factor of the step after an accepted step.
pub const STEP_GROWTH: f64 = 1.3;
/// Steps below this size abort the flow.
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, Copy)]
struct FlowExponents {
    beta: f64,
    /// `βq`.
    a: f64,
    m: f64,
    c: f64,
}

fn flow_exponents(e: &ExponentSet, d: usize) -> Result<FlowExponents> {
    if d < 2 {
        return Err(SmlError::WrongRegime("the flow needs dimension at least 2"));
    }
    let beta = e
        .flow_beta
        .value()
        .filter(|b| *b > 0.0)
        .ok_or(SmlError::WrongRegime("the flow exponent beta is unavailable for this q"))?;
    let a = beta * e.q;
    let k = 2.0 + beta * (e.q - 2.0);
    Ok(FlowExponents { beta, a, m: k / a, c: a / k })
}

/// `F[u] = ∫|∇u^β|² + λ/(q-2)[∫u^{2β} - κ(∫u^{βq})^{2/q}]`.
pub fn functional_f(u: &GridFunction, e: &ExponentSet, lambda: f64) -> Result<f64> {
    Ok(functional_terms(u, e, lambda)?.value())
}

/// The terms of `F` with the size of the cancelling parts, for roundoff estimates.
#[derive(Debug, Clone, Copy)]
pub struct FunctionalTerms {
    pub gradient: f64,
    pub l2: f64,
    pub lq_term: f64,
    pub coupling: f64,
}

impl FunctionalTerms {
    pub fn value(&self) -> f64 {
        self.gradient + self.coupling * (self.l2 - self.lq_term)
    }

    /// Sum of absolute sizes of the terms.
    pub fn magnitude(&self) -> f64 {
        self.gradient.abs() + self.coupling.abs() * (self.l2.abs() + self.lq_term.abs())
    }
}

pub fn functional_terms(u: &GridFunction, e: &ExponentSet, lambda: f64) -> Result<FunctionalTerms> {
    let fx = flow_exponents(e, u.grid().manifold().d)?;
    if !u.is_positive() {
        return Err(SmlError::NotPositive("F is defined for positive u".into()));
    }
    let g = u.grid();
    let v: Vec<f64> = u.values.iter().map(|x| x.powf(fx.beta)).collect();
    let (gradient, l2) = (g.dirichlet(&v), g.inner(&v, &v));
    let rho: Vec<f64> = u.values.iter().map(|x| x.powf(fx.a)).collect();
    let kappa = e.kappa(g.volume());
    Ok(FunctionalTerms {
        gradient,
        l2,
        lq_term: kappa * g.integrate(&rho).powf(2.0 / e.q),
        coupling: lambda / (e.q - 2.0),
    })
}

/// One linearly implicit step of size `dt` in the `ρ` variable; `None` when
/// the result is not positive or changes too much.
fn try_step(u: &GridFunction, fx: FlowExponents, dt: f64) -> Result<Option<GridFunction>> {
    let g = u.grid();
    let n = g.n();
    let k = g.stiffness();
    let mass = g.mass();
    let rho: Vec<f64> = u.values.iter().map(|x| x.powf(fx.a)).collect();
    let dd: Vec<f64> = rho.iter().map(|r| fx.m * r.powf(fx.m - 1.0)).collect();
    let lin: Vec<f64> = rho.iter().zip(&dd).map(|(r, d)| r.powf(fx.m) - d * r).collect();
    let klin = k.matvec(&lin);
    let rhs: Vec<f64> = (0..n).map(|j| mass[j] * rho[j] - dt * fx.c * klin[j]).collect();
    let s = dt * fx.c;
    let faces = k.off.len();
    let mut lower = vec![0.0; faces];
    let mut upper = vec![0.0; faces];
    for i in 0..faces {
        let next = (i + 1) % n;
        lower[i] = s * k.off[i] * dd[i];
        upper[i] = s * k.off[i] * dd[next];
    }
    if g.periodic() {
        // A[0][n-1] and A[n-1][0]
        lower[n - 1] = s * k.off[n - 1] * dd[n - 1];
        upper[n - 1] = s * k.off[n - 1] * dd[0];
    }
    let diag: Vec<f64> = (0..n).map(|j| mass[j] + s * k.diag[j] * dd[j]).collect();
    let system = Tridiag { lower, diag, upper, periodic: g.periodic() };
    let next = system.solve(&rhs)?;
    let ok = next.iter().zip(&rho).all(|(r1, r0)| *r1 > 0.0 && ((r1 - r0) / r0).abs() <= MAX_RELATIVE_CHANGE);
    if !ok {
        return Ok(None);
    }
    Ok(Some(u.with_values(next.iter().map(|r| r.powf(1.0 / fx.a)).collect())))
}

/// One step with backtracking: `dt` is halved until the step is accepted.
/// Returns the new state and the step actually taken.
pub fn flow_step(u: &GridFunction, e: &ExponentSet, dt: f64) -> Result<(GridFunction, f64)> {
    let fx = flow_exponents(e, u.grid().manifold().d)?;
    if !u.is_positive() {
        return Err(SmlError::NotPositive("the flow needs positive data".into()));
    }
    if !(dt > 0.0) {
        return Err(SmlError::InvalidParameter(format!("time step {dt} must be positive")));
    }
    let mut dt = dt;
    loop {
        if dt < MIN_STEP {
            return Err(SmlError::StepUnderflow { t: dt });
        }
        if let Some(next) = try_step(u, fx, dt)? {
            return Ok((next, dt));
        }
        dt *= 0.5;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub dt0: f64,
    pub dt_max: f64,
    pub max_steps: usize,
    /// Stop once `‖u - mean(u)‖_∞` drops below this.
    pub distance_tolerance: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { dt0: 1e-3, dt_max: 10.0, max_steps: 20000, distance_tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub t: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub dist_to_const: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub lambda: f64,
    pub times: Vec<f64>,
    pub f_values: Vec<f64>,
    /// Size of the cancelling terms of `F` at each record.
    pub f_magnitudes: Vec<f64>,
    pub sup_distance: Vec<f64>,
    /// `∫u^{βq}`.
    pub mass_monitor: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub final_state: GridFunction,
}

impl FlowTrace {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Roundoff level of `F` at record `i`: a few ulps per node of the
    /// cancelling terms.
    pub fn roundoff_floor(&self, i: usize) -> f64 {
        16.0 * self.final_state.grid().n() as f64 * f64::EPSILON * self.f_magnitudes[i]
    }

    /// Largest increase `F_{i+1} - F_i - rel_tol|F_i| - floor` over the trace;
    /// nonpositive when `F` is monotone up to tolerance.
    pub fn worst_increase(&self, rel_tol: f64) -> f64 {
        self.f_values
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let floor = self.roundoff_floor(i).max(self.roundoff_floor(i + 1));
                w[1] - w[0] - rel_tol * w[0].abs() - floor
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn records(&self) -> Vec<FlowRecord> {
        (0..self.times.len())
            .map(|i| FlowRecord { t: self.times[i], f: self.f_values[i], dist_to_const: self.sup_distance[i], dt: self.step_sizes[i] })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in self.records() {
            w.serialize(r).map_err(|e| SmlError::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Run the flow from `u0` up to time `t_end` or until `u` is within
/// `distance_tolerance` of a constant. The first record has `dt = 0`.
pub fn run_flow(u0: &GridFunction, e: &ExponentSet, lambda: f64, t_end: f64, opts: FlowOptions) -> Result<FlowTrace> {
    let fx = flow_exponents(e, u0.grid().manifold().d)?;
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut dt = opts.dt0;
    let rho_mass = |u: &GridFunction| u.grid().integrate(&u.values.iter().map(|x| x.powf(fx.a)).collect::<Vec<_>>());
    let terms = functional_terms(&u, e, lambda)?;
    let mut trace = FlowTrace {
        lambda,
        times: vec![0.0],
        f_values: vec![terms.value()],
        f_magnitudes: vec![terms.magnitude()],
        sup_distance: vec![u.distance_to_constant()],
        mass_monitor: vec![rho_mass(&u)],
        step_sizes: vec![0.0],
        final_state: u.clone(),
    };
    let mut steps = 0;
    while t < t_end && *trace.sup_distance.last().unwrap() >= opts.distance_tolerance && steps < opts.max_steps {
        let (next, taken) = flow_step(&u, e, dt.min(t_end - t))?;
        u = next;
        t += taken;
        steps += 1;
        let terms = functional_terms(&u, e, lambda)?;
        trace.times.push(t);
        trace.f_values.push(terms.value());
        trace.f_magnitudes.push(terms.magnitude());
        trace.sup_distance.push(u.distance_to_constant());
        trace.mass_monitor.push(rho_mass(&u));
        trace.step_sizes.push(taken);
        dt = (taken * STEP_GROWTH).min(opts.dt_max);
    }
    trace.final_state = u;
    Ok(trace)
}
