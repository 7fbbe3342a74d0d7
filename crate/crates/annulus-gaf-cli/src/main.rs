//! `annulus-gaf`: reproduces the numerical artefacts of the annulus GAF
//! library as CSV/JSON files and runs its validation suites.
//!
//! Exit status: 0 on success, 1 when a validation fails (or a computation
//! breaks down), 2 on invalid usage or parameters.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "annulus-gaf", version, about = "Kernels, correlation functions and zero processes of Gaussian analytic functions on an annulus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One-point density ρ¹ on a radial grid (`--q 0` selects the disk).
    Density {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        r: f64,
        /// Number of radial grid points.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[command(flatten)]
        output: Output,
    },
    /// The unfolded two-point function G^∨(x; r) on a grid of x ∈ (q, 1).
    Gvee {
        #[arg(long)]
        q: f64,
        /// Comma-separated weights.
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.6")]
        r: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[command(flatten)]
        output: Output,
    },
    /// The critical curve r₀(q) with its small-q parabola and q → 1 line.
    R0Curve {
        /// Comma-separated moduli; when omitted a uniform grid on (0, 0.95].
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<f64>>,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Randomised identity suite, reported as JSON.
    IdentitySuite {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5")]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.6,1.7")]
        r: Vec<f64>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Random instances per identity.
        #[arg(long, default_value_t = 120)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Negative control: breaks the conditioned-kernel closed form.
        #[arg(long, hide = true)]
        perturb_mccullough_shen: bool,
    },
    /// Monte Carlo check of the zero process against its closed forms.
    ///
    /// Writes the density bins as CSV (to `--out`, or stdout) and a JSON
    /// summary (to stdout when `--out` is given, otherwise to stderr).
    McVerify {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of radial bins.
        #[arg(long, default_value_t = 10)]
        grid: usize,
        /// Distance kept from the boundary circles.
        #[arg(long)]
        margin: Option<f64>,
        /// Modes kept on each side of n = 0 (automatic when omitted).
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
