//! Command-line front-end for `measure-balancer-core`.
//!
//! Every command reads JSON, writes JSON or CSV to the given writer and
//! returns a process exit code; see [`exit`] for the table.

pub mod commands;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Process exit codes.
pub mod exit {
    pub const STABLE: i32 = 0;
    pub const CONVERGED: i32 = 0;
    pub const INPUT_ERROR: i32 = 2;
    pub const POLYSTABLE: i32 = 10;
    pub const SEMISTABLE: i32 = 11;
    pub const UNSTABLE: i32 = 12;
    pub const DIVERGED: i32 = 20;
    pub const MAX_ITERATIONS: i32 = 21;
    pub const OUTSIDE_POLYTOPE: i32 = 22;
}

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "MEASURE_BALANCER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "measure-balancer", version, about = "Stability and momentum balancing for atomic measures on CPⁿ")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a measure as stable, polystable, semi-stable or unstable.
    ///
    /// Exit codes: 0 stable, 10 polystable, 11 semi-stable, 12 unstable.
    Classify(ClassifyArgs),
    /// Same as `classify --decompose`.
    Decompose(ClassifyArgs),
    /// Maximal weights λ along directions, as CSV. A measure is stable
    /// exactly when λ > 0 for every nonzero traceless Hermitian direction.
    Weight(WeightArgs),
    /// Find g with momentum(g·ν) = ρ − Id/(n+1).
    ///
    /// Exit codes: 0 converged, 20 diverged, 21 iteration limit.
    Balance(BalanceArgs),
    /// Measures on the unit sphere S² ≅ CP¹.
    Sphere {
        #[command(subcommand)]
        command: SphereCommand,
    },
    /// Solve the diagonal torus problem for a shift β.
    ///
    /// Exit codes: 0 converged, 21 iteration limit, 22 target outside the
    /// momentum polytope.
    Torus(TorusArgs),
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Measure JSON file.
    pub measure: PathBuf,
    /// Report masses within the equality tolerance as a separate
    /// `boundary` verdict.
    #[arg(long)]
    pub strict: bool,
    /// Tolerance for the mass equalities ν(L) = (dim L + 1)/(n+1).
    #[arg(long, default_value_t = measure_balancer_core::DEFAULT_TOL_EQ)]
    pub tol_eq: f64,
    /// Print bases and restricted measures of the splitting blocks.
    #[arg(long)]
    pub decompose: bool,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct WeightArgs {
    /// Measure JSON file.
    pub measure: PathBuf,
    /// Direction matrix JSON file (traceless Hermitian).
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub direction: Option<PathBuf>,
    /// Number of random unit directions.
    #[arg(long)]
    pub random: Option<usize>,
    /// Seed for the random directions.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also evaluate the flow oracle at this time.
    #[arg(long)]
    pub flow_check: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    FixedPoint,
    Descent,
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    /// Measure JSON file.
    pub measure: PathBuf,
    /// Target density matrix ρ (positive definite, trace one).
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::FixedPoint)]
    pub method: Method,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SphereCommand {
    /// Möbius transformation centring the measure.
    Balance(SphereBalanceArgs),
    /// Euclidean center of mass.
    Com {
        /// Sphere measure JSON file.
        measure: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SphereBalanceArgs {
    /// Sphere measure JSON file.
    pub measure: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TorusArgs {
    /// Measure JSON file.
    pub measure: PathBuf,
    /// Comma-separated shift β with zero sum; zero when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

/// Sizes the global thread pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads(value: Option<&str>) -> anyhow::Result<()> {
    let Some(value) = value else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}
