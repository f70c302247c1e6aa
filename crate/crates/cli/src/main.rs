mod commands;
mod error;
mod ingest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use outlierkit_core::{EstimatorKind, Family, Method, Side};

#[derive(Parser, Debug)]
#[command(name = "outlierkit", version, about = "Multiple outlier identification with BP and baseline methods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify one column of a CSV file.
    Detect(DetectArgs),
    /// Simulate critical values and store them in the cache.
    SimulateCritical(SimulateArgs),
    /// Masking and swamping over a grid of settings, as CSV.
    Experiment(ExperimentArgs),
    /// Empirical level on clean samples for a list of sample sizes, as CSV.
    SignificanceCurve(CurveArgs),
}

/// Settings shared by every method.
#[derive(Args, Debug, Clone)]
pub struct Tuning {
    /// Hypothesized family F0.
    #[arg(long, default_value = "normal")]
    pub family: Family,
    /// Side searched: left, right or two.
    #[arg(long, default_value = "two")]
    pub side: Side,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Upper bound on the number of outliers (default 5; Rosner needs it in `detect`).
    #[arg(long)]
    pub s: Option<usize>,
    /// Location and scale estimators for dg: robust or ml.
    #[arg(long)]
    pub estimator: Option<EstimatorKind>,
}

#[derive(Args, Debug, Clone)]
pub struct CacheArgs {
    /// Critical-value cache file.
    #[arg(long, env = "OUTLIERKIT_CACHE")]
    pub cache: Option<PathBuf>,
    /// Master seed for simulated critical values.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long, default_value = "bp")]
    pub method: Method,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(flatten)]
    pub cache: CacheArgs,
    /// Input CSV file.
    #[arg(long)]
    pub input: PathBuf,
    /// Column name, or 1-based position.
    #[arg(long, default_value = "1")]
    pub column: String,
    /// Write the JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Replicates for critical values that must be simulated.
    #[arg(long, default_value_t = 100_000)]
    pub replicates: usize,
    /// Run on samples of 15 or fewer observations.
    #[arg(long)]
    pub force: bool,
    /// Apply BP to ln x for a shape-scale family; --family names the log-scale family.
    #[arg(long)]
    pub shape_scale: bool,
    /// Use a simulated finite-sample critical value for BP.
    #[arg(long)]
    pub exact: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value = "bp")]
    pub method: Method,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(flatten)]
    pub cache: CacheArgs,
    /// Sample size. Omit for the asymptotic BP value.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub replicates: usize,
    /// Recompute values that are already cached.
    #[arg(long)]
    pub force: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContaminantKind {
    Exponential,
    TruncatedNormal,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContaminateSide {
    Right,
    Left,
    Both,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Methods, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "bp")]
    pub method: Vec<Method>,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(flatten)]
    pub cache: CacheArgs,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Contaminant counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<usize>,
    /// Contaminant parameters (theta or mu), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub param: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ContaminantKind::Exponential)]
    pub contaminant: ContaminantKind,
    /// Spread of truncated-normal contaminants.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, value_enum, default_value_t = ContaminateSide::Both)]
    pub contaminate: ContaminateSide,
    /// Overall level of the outlier region that anchors contaminants.
    #[arg(long, default_value_t = 0.05)]
    pub alpha_bar: f64,
    /// Replicates per cell.
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    /// Replicates for critical values that must be simulated.
    #[arg(long, default_value_t = 100_000)]
    pub critical_replicates: usize,
    /// CSV output file (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[arg(long, default_value = "bp")]
    pub method: Method,
    #[command(flatten)]
    pub tuning: Tuning,
    #[command(flatten)]
    pub cache: CacheArgs,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 100_000)]
    pub critical_replicates: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors share exit code 1 with other configuration errors
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    let result = match cli.command {
        Command::Detect(a) => commands::detect(&a),
        Command::SimulateCritical(a) => commands::simulate_critical(&a),
        Command::Experiment(a) => commands::experiment(&a),
        Command::SignificanceCurve(a) => commands::significance_curve(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("outlierkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
