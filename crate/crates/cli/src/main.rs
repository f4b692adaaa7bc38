use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracnls_core::ProblemParams;
use num_complex::Complex64;

mod commands;
mod config;
mod error;

use error::CliError;

/// Pseudospectral experiments for `i u_t + Δu + g(u) = 0` in fractional
/// Sobolev and Besov norms.
#[derive(Debug, Parser)]
#[command(name = "fracnls", version)]
struct Cli {
    /// Worker threads; `FRACNLS_THREADS` takes precedence when set.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the stdout summary.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the exponent set for (N, s, alpha) as JSON.
    Exponents {
        #[arg(long = "dim", short = 'N')]
        dim: usize,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        alpha: f64,
        /// Linear part `A` of the growth bound.
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        /// Power part `B` of the growth bound; `1 + alpha` when omitted.
        #[arg(long)]
        b: Option<f64>,
    },
    /// Run the built-in invariant suites.
    Selftest {
        /// Optional JSON with `partition_gain_error`, `pointwise_samples`, `seed`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        partition_gain_error: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Sample the pointwise modulus and phase inequalities.
    VerifyPointwise { config: PathBuf },
    /// Tabulate the Besov remainder K(u, u + 2^-k psi).
    Remainder { config: PathBuf },
    /// Solve one initial-value problem and record norms per slice.
    Solve { config: PathBuf },
    /// Measure the dependence of the flow map on its initial datum.
    Dependence { config: PathBuf },
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var("FRACNLS_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "FRACNLS_THREADS must be a positive integer (got {v:?})"
                ))
            }),
        _ => match flag {
            Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
            other => Ok(other),
        },
    }
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Exponents {
            dim,
            s,
            alpha,
            a,
            b,
        } => {
            let params = ProblemParams {
                dim: *dim,
                s: *s,
                alpha: *alpha,
                lambda: Complex64::new(1.0, 0.0),
                a: *a,
                b: b.unwrap_or(1.0 + alpha),
            };
            commands::exponents(&params).map(|t| t + "\n")
        }
        Command::Selftest {
            config,
            partition_gain_error,
            samples,
        } => commands::selftest(config.as_deref(), *partition_gain_error, *samples),
        Command::VerifyPointwise { config } => commands::verify_pointwise(config, out),
        Command::Remainder { config } => commands::remainder(config, out),
        Command::Solve { config } => commands::solve(config, out),
        Command::Dependence { config } => commands::dependence(config, out),
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cli.threads)? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            if !cli.quiet {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
