//! `sparsecert` command-line front end.
//!
//! Exit codes: 0 success, 1 malformed input, 2 solver hit its iteration
//! cap, 3 infeasible problem, 4 not certified (or a check failed),
//! 5 unsupported structure/norm/method combination, 6 an experiment bound
//! was violated or a trial failed.

mod commands;
mod experiment;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "sparsecert", version, about = "Sparse, block-sparse and low-rank recovery with verifiable certificates")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Relative tolerance of the splitting solver.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Print one JSON document instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Regular,
    Penalized,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Auto,
    Lp,
    Split,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    ColumnLp,
    Ubar,
    Ustar,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Recover a representation from observations.
    Recover {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Regular)]
        mode: ModeArg,
        /// Penalty for `--mode penalized`.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
        backend: BackendArg,
        /// Write the result as JSON.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute a verifiable (gamma, beta) certificate.
    Certify {
        #[arg(long)]
        structure: PathBuf,
        /// Sensing matrix CSV.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value = "l1")]
        phi: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Descent iterations for the low-rank bound.
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        /// Subgradient steps over H for the low-rank certificate.
        #[arg(long, default_value_t = 0)]
        polish: usize,
        /// Re-check the certificate on this many random draws.
        #[arg(long, default_value_t = 0)]
        check: usize,
        /// Include H and W in the written certificate.
        #[arg(long)]
        with_matrices: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Brute-force evaluation of the nullspace property.
    Nullspace {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        s: f64,
        /// Cap on the number of linear programs.
        #[arg(long, default_value_t = 200_000)]
        max_lps: usize,
    },
    /// Evaluate the closed-form error bound.
    Bound {
        /// Read gamma and beta from a certificate file.
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, value_enum, default_value_t = ModeArg::Regular)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        delta_x: f64,
        #[arg(long, default_value_t = 0.0)]
        delta_phi: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        lambda: Option<f64>,
        /// Realized phi(xi) of the noise.
        #[arg(long, default_value_t = 0.0)]
        phi_xi: f64,
    },
    /// Run a bound-validation experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Randomized check of the structure axioms and the pairing inequality.
    Axioms {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
}

/// What a command reports, in text and JSON form.
pub struct Outcome {
    pub code: u8,
    pub json: Value,
    pub lines: Vec<String>,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Lib(sparsecert::Error),
}

impl From<io::InputError> for CliError {
    fn from(e: io::InputError) -> Self {
        CliError::Input(e.0)
    }
}

impl From<sparsecert::Error> for CliError {
    fn from(e: sparsecert::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Lib(sparsecert::Error::Unsupported(_)) => 5,
            CliError::Lib(sparsecert::Error::Infeasible) => 3,
            CliError::Lib(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Input(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::dispatch(&cli) {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.json).expect("serializable"));
            } else {
                for l in &out.lines {
                    println!("{l}");
                }
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "error": e.message(), "exit_code": e.code() }));
            }
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
