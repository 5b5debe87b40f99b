//! `fragkit` command-line front end.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context;
use config::Config;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "fragkit", version, about = "Weighted-L1 analysis and simulation of fragmentation equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (INI-style).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Command tolerance (mass classification, certificate, mass assertion,
    /// or quadrature rel_tol for the ratio-based commands).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Comma-separated invariants for `simulate`: positivity, mass, substochastic.
    #[arg(long = "assert", global = true, value_delimiter = ',')]
    asserts: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Classify mass conservation of the configured kernel.
    KernelInfo,
    /// Sampled admissibility report of a weight.
    CheckWeight,
    /// Construct a weight with a sampled certificate.
    BuildWeight,
    /// Choose parameters of an exponential weight c^x.
    FindExpWeight,
    /// Discretize and evolve the equation.
    Simulate,
    /// Compare two weights through their log-derivatives.
    CompareWeights,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FRAGKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("FRAGKIT_THREADS = `{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failed(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    init_threads()?;
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Invalid(format!("--tol must be finite and > 0, got {t}")));
        }
    }
    let path = cli.config.as_ref().ok_or_else(|| CliError::Invalid("--config is required".into()))?;
    let ctx = Context {
        config: Config::load(path)?,
        out: cli.out.clone(),
        tol: cli.tol,
        seed: cli.seed,
        asserts: cli.asserts.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::KernelInfo => commands::kernel_info(&ctx, &mut out),
        Command::CheckWeight => commands::check_weight(&ctx, &mut out),
        Command::BuildWeight => commands::build_weight(&ctx, &mut out),
        Command::FindExpWeight => commands::find_exp_weight(&ctx, &mut out),
        Command::Simulate => commands::simulate_cmd(&ctx, &mut out),
        Command::CompareWeights => commands::compare(&ctx, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
