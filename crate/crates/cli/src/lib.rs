//! Batch front end: one subcommand per computation, structured reports on
//! stdout and CSV files for curves and grids.
//!
//! Exit codes: 0 success (or "compatible" for `verify`), 1 a violated
//! condition (`verify`) or a theorem-violation alarm (`sweep`), 2 invalid
//! input or a failed computation.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
pub mod output;
pub mod sweep;

pub use commands::{run_verify_example, Outcome};
pub use output::{git_blob_sha1, Emit};
pub use sweep::{run_sweep, SweepReport};

/// Environment variable naming the default directory for CSV output.
pub const OUT_DIR_ENV: &str = "MATHER_LAB_OUT";

#[derive(Debug, Parser)]
#[command(name = "mather-lab", version, about = "Minimizing measures on the two-torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// `report` (JSON), `table`, `csv`, or a file path ending in `.csv`.
    #[arg(long, global = true, default_value = "report")]
    pub emit: String,

    /// Directory for CSV files written with `--emit csv`.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Necessary condition and C⁴ obstruction for one orbit.
    Verify(VerifyArgs),
    /// The obstruction over seeded random potentials below threshold.
    Sweep(SweepArgs),
    /// The orbit average and its derivatives over one period.
    Fbar(FbarArgs),
    /// Convergents and the certified irrationality constant.
    Diophantine(DiophantineArgs),
    /// Linear program over closed measures on a grid.
    MatherLp(MatherLpArgs),
    /// Discrete weak KAM solution and critical value.
    WeakKam(WeakKamArgs),
    /// Floquet multipliers of an orbit under a penalty potential.
    Floquet(FloquetArgs),
    /// Projected Aubry set estimate.
    Aubry(AubryArgs),
    /// Calibration margins of excursions away from a penalized orbit.
    Homoclinic(HomoclinicArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PotentialArgs {
    /// JSON document `{"modes": [{"m", "n", "re", "im"}]}`; zero if omitted.
    #[arg(long)]
    pub potential: Option<PathBuf>,

    /// Replace non-Hermitian coefficients by the real part instead of failing.
    #[arg(long)]
    pub symmetrize: bool,

    /// Slope of the drift: `sqrtN`, `golden` or `A,B,C[,smaller]`.
    #[arg(long, default_value = "sqrt2")]
    pub r: String,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, default_value = "3,2")]
    pub orbit: String,
    /// Period of the orbit; the action-optimal one if omitted.
    #[arg(long)]
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = "sqrt2")]
    pub r: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Random potentials per orbit.
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    /// Orbits as `a,b;a,b;...`. Defaults to the convergents with `b ≤ bmax`.
    #[arg(long)]
    pub orbits: Option<String>,
    #[arg(long, default_value_t = 12)]
    pub bmax: i64,
    /// Multiplies the certified threshold (values above 1 are wrong on purpose).
    #[arg(long, default_value_t = 1.0)]
    pub threshold_scale: f64,
    /// Add a constructed compatible potential per orbit when it fits under
    /// the scaled threshold.
    #[arg(long)]
    pub self_test: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FbarArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, default_value = "3,2")]
    pub orbit: String,
    /// Samples over one period of the average.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DiophantineArgs {
    #[arg(long, default_value = "sqrt2")]
    pub r: String,
    #[arg(long, default_value_t = 200)]
    pub bmax: i64,
}

#[derive(Debug, Clone, Args)]
pub struct MatherLpArgs {
    /// JSON with any of `nx`, `ny`, `nv`, `v_max`, `test_modes`, `potential`, `r`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub nv: Option<usize>,
    #[arg(long)]
    pub v_max: Option<f64>,
    #[arg(long)]
    pub test_modes: Option<i32>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    /// Tolerance of the Lax–Oleinik iteration.
    #[arg(long = "solver-tol", default_value_t = 1e-6)]
    pub solver_tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    /// Add `λ g` vanishing on the orbit class `a,b`.
    #[arg(long)]
    pub penalty: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Penalty amplitude; raised to the smallest certified value if lower.
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
}

#[derive(Debug, Clone, Args)]
pub struct WeakKamArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    #[arg(long)]
    pub penalty: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FloquetArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, default_value = "3,2")]
    pub orbit: String,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
}

#[derive(Debug, Clone, Args)]
pub struct AubryArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Threshold on the calibration defect.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct HomoclinicArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "3,2")]
    pub orbit: String,
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Outcome {
    commands::dispatch(cli)
}
