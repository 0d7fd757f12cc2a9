//! `stochmap` command line: JSON matrix files in, JSON reports on stdout,
//! a short human summary on stderr.
//!
//! Exit codes: 0 success, 1 I/O or parse error, 2 constraint or precondition
//! violation, 3 algorithmic failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use stochmap_core::Tolerances;

pub mod commands;
pub mod error;
pub mod format;

pub use error::CliError;
pub use format::{Kind, MatrixFile};

#[derive(Debug, Parser)]
#[command(name = "stochmap", version, about = "Classify, decompose, parameterize and dilate linear stochastic maps")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = stochmap_core::tolerance::STRUCTURAL)]
    pub tolerance_structural: f64,
    #[arg(long, global = true, default_value_t = stochmap_core::tolerance::SIGN)]
    pub tolerance_sign: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural constraints of a state, map, unitary or dilation file.
    Validate { path: PathBuf },
    /// Hermiticity, trace preservation, complete and block positivity.
    Classify {
        path: PathBuf,
        #[arg(long, default_value_t = stochmap_core::maps::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Split the dynamical matrix into positive and negative operator families.
    Decompose {
        path: PathBuf,
        /// Output file, or a directory to write `decomposition.json` into.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hyperbolic and trigonometric angles of a trace-preserving map.
    Parameterize {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unitary or pseudo-unitary dilation (chosen by the sign structure unless --strategy is given).
    Dilate {
        path: PathBuf,
        #[arg(long)]
        strategy: Option<String>,
        /// Output file, or a directory to write `dilation.json` into.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contract a dilation against a density matrix.
    Contract { dilation: PathBuf, state: PathBuf },
    /// Convex combination of maps.
    Mix {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a map to a density matrix.
    Apply {
        map: PathBuf,
        state: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded random map.
    Random {
        #[arg(long)]
        dim: usize,
        /// Sampler name: cp, ncp, hermpres or family.
        #[arg(long, default_value = "cp")]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of positive operators (cp, family).
        #[arg(long)]
        rank: Option<usize>,
        /// Number of negative operators (family).
        #[arg(long)]
        negative_rank: Option<usize>,
        /// Rejection budget (ncp).
        #[arg(long, default_value_t = 100)]
        retries: usize,
    },
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let tol = Tolerances {
        structural: cli.tolerance_structural,
        sign: cli.tolerance_sign,
    };
    match commands::dispatch(&cli.command, &tol) {
        Ok(outcome) => {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&outcome.report).expect("reports serialize")
            );
            let _ = writeln!(err, "{}", outcome.summary);
            outcome.exit
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
