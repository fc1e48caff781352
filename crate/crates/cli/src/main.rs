//! `sml`: reproducible experiments on interpolation constants, spectral
//! bounds, the nonlinear flow and rigidity.
//!
//! Exit codes: 0 ok, 1 violation detected, 2 usage error, 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sml_core::SmlError;

use commands::{InitialData, SpectralArgs, Verdict};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "sml", version, about = "Interpolation constants, spectral bounds and rigidity on model manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// sphere:d, circle:L or revolution:file
    #[arg(long, default_value = "sphere:2")]
    manifold: String,
    #[arg(long)]
    q: f64,
    /// Grid size; chosen from the parameters when omitted.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Violation tolerance, relative to the natural scale of the check.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep μ(α) (q > 2) or ν(β) (q < 2).
    MuCurve {
        #[command(flatten)]
        common: Common,
        /// lo:hi[:count], log-spaced
        #[arg(long)]
        alpha_range: Option<String>,
        #[arg(long)]
        beta_range: Option<String>,
    },
    /// Euclidean constant K_{q,d}.
    Kqd {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random-potential certificates for the Schrödinger bounds.
    SpectralCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Largest potential size (q > 2).
        #[arg(long, default_value_t = 20.0)]
        max_scale: f64,
        /// Potential floor and spread (q < 2).
        #[arg(long, default_value_t = 0.1)]
        floor: f64,
        #[arg(long, default_value_t = 5.0)]
        spread: f64,
        /// Constant potentials to tabulate.
        #[arg(long, value_delimiter = ',')]
        constants: Vec<f64>,
    },
    /// Run the nonlinear flow and record F.
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 100.0)]
        t_end: f64,
        #[arg(long, value_enum, default_value_t = InitialData::Random)]
        init: InitialData,
    },
    /// Newton scan for positive solutions of the elliptic equation.
    Rigidity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 50)]
        inits: usize,
        /// lo:hi bracket for the operational threshold.
        #[arg(long)]
        bisect: Option<String>,
        #[arg(long, default_value_t = 0.005)]
        width: f64,
    },
}

fn resolve(name: &str, c: Common) -> sml_core::Result<config::Resolved> {
    RunConfig::resolve(name, &c.manifold, c.q, c.n, c.seed, c.out, c.tol)
}

fn run(cli: Cli) -> sml_core::Result<Verdict> {
    match cli.command {
        Command::MuCurve { common, alpha_range, beta_range } => {
            commands::mu_curve(resolve("mu-curve", common)?, alpha_range.as_deref(), beta_range.as_deref())
        }
        Command::Kqd { d, q, out } => commands::kqd(d, q, out.as_deref()),
        Command::SpectralCheck { common, count, max_scale, floor, spread, constants } => {
            let args = SpectralArgs { count, max_scale, floor, spread, constants };
            commands::spectral_check(resolve("spectral-check", common)?, &args)
        }
        Command::Flow { common, lambda, t_end, init } => commands::flow(resolve("flow", common)?, lambda, t_end, init),
        Command::Rigidity { common, lambda, inits, bisect, width } => {
            commands::rigidity(resolve("rigidity", common)?, lambda, inits, bisect.as_deref(), width)
        }
    }
}

fn exit_code(err: &SmlError) -> u8 {
    match err {
        SmlError::InvalidParameter(_)
        | SmlError::Supercritical { .. }
        | SmlError::QuadraticExponent
        | SmlError::WrongRegime(_)
        | SmlError::InvalidProfile(_)
        | SmlError::DimensionMismatch { .. }
        | SmlError::Io(_) => 2,
        SmlError::CurveInvariant(_) => 1,
        _ => 3,
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("SML_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Violation) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
