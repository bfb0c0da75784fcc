//! devsurf: build developable charts from curvature data, solve the
//! linearized isometry equation, match isometries to higher order, and run
//! the thin-shell energy sweeps.
//!
//! Exit codes: 0 success, 2 config error, 3 admissibility failure,
//! 4 solver failure, 5 scaling violation.

mod run;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "devsurf",
    about = "Developable surface charts, infinitesimal isometries, thin-shell energy sweeps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the chart and report admissibility and bending energy.
    Build {
        #[arg(long)]
        config: PathBuf,
        /// Grid override, e.g. 256x256.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve sym grad w = B for a manufactured or file-supplied B.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: Option<String>,
        /// `manufactured` or `csv:<path>` with t,sigma,b11,b12,b22 rows.
        #[arg(long, default_value = "manufactured")]
        b: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Extract (a, b), evaluate J1/J2 and decide membership.
    Classify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: Option<String>,
        /// Normal profile a(t) (profile vocabulary).
        #[arg(long)]
        a: Option<String>,
        /// Ruling slope profile b(t).
        #[arg(long)]
        b: Option<String>,
        /// Sampled normal component, `csv:<path>` with one node per row.
        #[arg(long)]
        v3: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Match a first-order isometry to the given order and sweep the defect.
    Match {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: Option<String>,
        /// Comma-separated epsilon sweep.
        #[arg(long, default_value = "0.1,0.05,0.025,0.0125")]
        eps: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Thickness sweep certifying the limiting bending energy.
    Gamma {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        beta: f64,
        /// Comma-separated thickness sweep (decreasing).
        #[arg(long, default_value = "0.0625,0.03125,0.015625,0.0078125,0.00390625")]
        h: String,
        #[arg(long, default_value_t = 0.25)]
        h0: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Emit OBJ meshes of the chart and optionally a deformed configuration.
    Export {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: Option<String>,
        /// Normal profile of a first-order isometry to deform by.
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            run::exit_code(&e)
        }
    };
    std::process::exit(code);
}
