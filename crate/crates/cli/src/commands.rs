use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use sml_core::discretization::{Grid, DEFAULT_NODES};
use sml_core::euclidean::kqd_with_state;
use sml_core::exponents::{build_exponents, Regime};
use sml_core::flow::{run_flow, FlowOptions};
use sml_core::interp::{curve_sweep, known_lambda_star, SolverOptions, Which};
use sml_core::random;
use sml_core::rigidity::{bisect_lambda, rigidity_scan, RigidityRecord};
use sml_core::schrodinger::{check_thm2, check_thm4, random_thm2_batch, random_thm4_batch, CertificateRecord, SpectralCertificate};
use sml_core::{Result, SmlError};

use crate::config::{ParamRange, Resolved, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Violation,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| SmlError::Io(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn solver_options(config: &RunConfig) -> SolverOptions {
    SolverOptions { n: config.n, seed: config.seed, ..SolverOptions::default() }
}

fn grid_for(r: &Resolved) -> Result<Arc<Grid>> {
    Ok(Arc::new(Grid::new(r.manifold.clone(), r.config.n.unwrap_or(DEFAULT_NODES))?))
}

#[derive(Serialize)]
struct CurveSummary<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    /// Largest parameter with a constant minimizer.
    threshold_estimate: Option<f64>,
    /// Linear-regime threshold from the known rigidity constant.
    threshold_theory: Option<f64>,
    kappa: f64,
    /// `α^{ϑ-1} μ(α) / K_{q,d}` at the largest `α`.
    asymptotic_ratio: Option<f64>,
    points: usize,
}

pub fn mu_curve(mut r: Resolved, alpha_range: Option<&str>, beta_range: Option<&str>) -> Result<Verdict> {
    let e = r.config.exponents;
    let which = match e.regime {
        Regime::SubcriticalAbove2 => Which::Mu,
        Regime::Below2 => Which::Nu,
    };
    let params = match (which, alpha_range, beta_range) {
        (Which::Mu, Some(a), None) => {
            let range = ParamRange::parse(a)?;
            r.config.alpha_range = Some(range);
            range.values()
        }
        (Which::Nu, None, Some(b)) => {
            let range = ParamRange::parse(b)?;
            r.config.beta_range = Some(range);
            range.values()
        }
        (Which::Mu, None, None) => {
            let range = ParamRange::parse("0.1:50:20")?;
            r.config.alpha_range = Some(range);
            range.values()
        }
        (Which::Nu, None, None) => {
            let range = ParamRange::parse("0.1:50:20")?;
            r.config.beta_range = Some(range);
            range.values()
        }
        (Which::Mu, _, Some(_)) => return Err(SmlError::InvalidParameter("--beta-range needs q < 2".into())),
        (Which::Nu, Some(_), _) => return Err(SmlError::InvalidParameter("--alpha-range needs q > 2".into())),
    };
    let curve = match curve_sweep(&r.manifold, &e, &params, which, &solver_options(&r.config)) {
        Ok(c) => c,
        Err(SmlError::CurveInvariant(msg)) => {
            eprintln!("curve invariant violated: {msg}");
            return Ok(Verdict::Violation);
        }
        Err(err) => return Err(err),
    };
    let out = r.config.out.clone();
    let mut w = open_out(out.as_deref())?;
    curve.write_csv(&mut w)?;
    drop(w);

    let kappa = e.kappa(r.manifold.volume);
    let threshold_estimate = curve.points.iter().filter(|p| p.is_constant).map(|p| p.param).fold(None, |a: Option<f64>, b| Some(a.map_or(b, |x| x.max(b))));
    let threshold_theory = known_lambda_star(&r.manifold).map(|lam| match which {
        Which::Mu => lam / (e.q - 2.0),
        Which::Nu => e.linear_nu_threshold(kappa, lam),
    });
    let asymptotic_ratio = match which {
        Which::Mu if e.q < e.two_star => {
            let (k, _) = kqd_with_state(&e)?;
            let last = curve.points.last().unwrap();
            Some(last.param.powf(e.vartheta - 1.0) * last.value / k)
        }
        _ => None,
    };
    let summary = CurveSummary {
        schema_version: SCHEMA_VERSION,
        config: &r.config,
        threshold_estimate,
        threshold_theory,
        kappa,
        asymptotic_ratio,
        points: curve.points.len(),
    };
    match out {
        Some(p) => write_json(Some(&summary_path(&p)), &summary)?,
        None => {
            serde_json::to_writer(io::stderr().lock(), &summary).map_err(|e| SmlError::Io(e.to_string()))?;
            eprintln!();
        }
    }
    Ok(Verdict::Ok)
}

#[derive(Serialize)]
struct KqdReport {
    schema_version: u32,
    d: usize,
    q: f64,
    kqd: f64,
    shoot_amplitude: f64,
    bisection_steps: usize,
    cut_radius: f64,
    stationarity_defect: f64,
    virial_defect: f64,
}

pub fn kqd(d: usize, q: f64, out: Option<&Path>) -> Result<Verdict> {
    let e = build_exponents(d, q)?;
    e.require_above_2()?;
    let (k, state) = kqd_with_state(&e)?;
    let report = KqdReport {
        schema_version: SCHEMA_VERSION,
        d,
        q,
        kqd: k,
        shoot_amplitude: state.shoot_amplitude,
        bisection_steps: state.bisection_steps,
        cut_radius: state.cut_radius,
        stationarity_defect: state.stationarity_defect(),
        virial_defect: state.virial_defect(),
    };
    write_json(out, &report)?;
    Ok(Verdict::Ok)
}

#[derive(Serialize)]
struct SpectralReport<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    tolerance: f64,
    all_hold: bool,
    worst_relative_gap: f64,
    certificates: Vec<CertificateRecord>,
    constant_potentials: Vec<ConstantRow>,
}

#[derive(Serialize)]
struct ConstantRow {
    value: f64,
    lambda1: f64,
    bound: f64,
    gap: f64,
    linear_regime: bool,
}

pub struct SpectralArgs {
    pub count: usize,
    pub max_scale: f64,
    pub floor: f64,
    pub spread: f64,
    pub constants: Vec<f64>,
}

pub fn spectral_check(r: Resolved, args: &SpectralArgs) -> Result<Verdict> {
    let e = r.config.exponents;
    let grid = grid_for(&r)?;
    let opts = solver_options(&r.config);
    let tol = r.config.tol.unwrap_or(1e-7);
    let (batch, constants): (Vec<SpectralCertificate>, Vec<SpectralCertificate>) = match e.regime {
        Regime::SubcriticalAbove2 => (
            random_thm2_batch(&grid, &e, args.count, args.max_scale, r.config.seed, &opts)?,
            args.constants.iter().map(|c| check_thm2(&e, &grid.constant(*c), &opts)).collect::<Result<_>>()?,
        ),
        Regime::Below2 => (
            random_thm4_batch(&grid, &e, args.count, args.floor, args.spread, r.config.seed, &opts)?,
            args.constants.iter().map(|c| check_thm4(&e, &grid.constant(*c), &opts)).collect::<Result<_>>()?,
        ),
    };
    let all_hold = batch.iter().chain(&constants).all(|c| c.holds(tol));
    let worst_relative_gap = batch.iter().chain(&constants).map(|c| c.gap / c.scale()).fold(f64::INFINITY, f64::min);
    let report = SpectralReport {
        schema_version: SCHEMA_VERSION,
        config: &r.config,
        tolerance: tol,
        all_hold,
        worst_relative_gap,
        certificates: batch.iter().enumerate().map(|(i, c)| c.record(&e, Some(r.config.seed.wrapping_add(i as u64)))).collect(),
        constant_potentials: args
            .constants
            .iter()
            .zip(&constants)
            .map(|(v, c)| ConstantRow { value: *v, lambda1: c.lambda1, bound: c.bound, gap: c.gap, linear_regime: c.linear_regime })
            .collect(),
    };
    write_json(r.config.out.as_deref(), &report)?;
    Ok(if all_hold { Verdict::Ok } else { Verdict::Violation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    Random,
    Constant,
}

pub fn flow(mut r: Resolved, lambda: f64, t_end: f64, init: InitialData) -> Result<Verdict> {
    r.config.lambda = Some(lambda);
    let e = r.config.exponents;
    if !(t_end > 0.0) {
        return Err(SmlError::InvalidParameter(format!("end time {t_end} must be positive")));
    }
    let grid = grid_for(&r)?;
    let u0 = match init {
        InitialData::Random => grid.function(random::random_positive(&mut random::rng(r.config.seed), &grid, 8))?,
        InitialData::Constant => grid.constant(1.0),
    };
    let trace = run_flow(&u0, &e, lambda, t_end, FlowOptions::default())?;
    trace.write_csv(open_out(r.config.out.as_deref())?)?;
    let tol = r.config.tol.unwrap_or(1e-9);
    let asserted = known_lambda_star(&r.manifold).is_some_and(|star| lambda <= star);
    if !asserted {
        eprintln!("warning: lambda = {lambda} is not below a known rigidity threshold; monotonicity of F is not asserted");
        return Ok(Verdict::Ok);
    }
    let worst = trace.worst_increase(tol);
    if worst > 0.0 {
        eprintln!("F increased by {worst:e} beyond tolerance");
        return Ok(Verdict::Violation);
    }
    Ok(Verdict::Ok)
}

#[derive(Serialize)]
struct RigidityOutput<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    report: RigidityRecord,
    bisection: Option<(f64, f64)>,
}

pub fn rigidity(mut r: Resolved, lambda: f64, inits: usize, bisect: Option<&str>, width: f64) -> Result<Verdict> {
    r.config.lambda = Some(lambda);
    let e = r.config.exponents;
    if e.regime != Regime::SubcriticalAbove2 {
        return Err(SmlError::WrongRegime("the rigidity scan needs q > 2"));
    }
    let grid = grid_for(&r)?;
    let report = rigidity_scan(&grid, &e, lambda, inits, r.config.seed, None)?;
    let bisection = match bisect {
        Some(text) => {
            let range = ParamRange::parse(&format!("{text}:2"))?;
            Some(bisect_lambda(&grid, &e, range.lo, range.hi, width, inits, r.config.seed)?)
        }
        None => None,
    };
    let violation = known_lambda_star(&r.manifold).is_some_and(|star| lambda < star) && !report.only_constants();
    let output = RigidityOutput {
        schema_version: SCHEMA_VERSION,
        config: &r.config,
        report: report.record(r.manifold.descriptor(), &e, r.config.seed),
        bisection,
    };
    write_json(r.config.out.as_deref(), &output)?;
    if violation {
        eprintln!("nonconstant positive solution below the rigidity threshold");
        return Ok(Verdict::Violation);
    }
    Ok(Verdict::Ok)
}
