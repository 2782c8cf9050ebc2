use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod io;

#[derive(Parser, Debug)]
#[command(name = "kmrcd", version, about = "Kernel MRCD robust estimation and outlier detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the estimator and write the report (plus center and covariance for the linear kernel).
    Fit(FitArgs),
    /// Fit the estimator and also write per-observation distances and outlier flags.
    Detect(FitArgs),
    /// Write the Gram matrix of the robustly standardized data; `detect --kernel precomputed`
    /// on it reproduces `detect` on the coordinates.
    Gram(GramArgs),
    /// Run simulation replications and write one CSV row per replication.
    Simulate(SimulateArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelName {
    Linear,
    Rbf,
    Poly2,
    Precomputed,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorName {
    Alyz,
    Tcopula,
    Clayton,
    Circle,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContaminationName {
    None,
    Point,
    Shift,
    Cluster,
}

#[derive(Args, Debug, Clone)]
pub struct SubsetArgs {
    /// Subset size as a fraction of n, in [0.5, 1).
    #[arg(long, conflicts_with = "h")]
    pub h_fraction: Option<f64>,
    /// Subset size as a count.
    #[arg(long)]
    pub h: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV file of observations (header optional), or a headerless Gram matrix with `--kernel precomputed`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "rbf")]
    pub kernel: KernelName,
    /// RBF bandwidth; defaults to the median heuristic on the standardized data.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub subset: SubsetArgs,
    #[arg(long, default_value_t = kmrcd::estimator::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    /// Format of the report file.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Also write distances on a G x G grid spanning the data (two-column data only).
    #[arg(long, value_name = "G")]
    pub contour_grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GramArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "rbf")]
    pub kernel: KernelName,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Use the raw coordinates instead of the robust z-scores (rbf then needs `--sigma`).
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "alyz")]
    pub generator: GeneratorName,
    /// Outlier model for the alyz generator; defaults to shift when `--eps` is positive.
    #[arg(long, value_enum)]
    pub contamination: Option<ContaminationName>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Contamination fraction in [0, 0.5).
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Kernel; defaults to linear for alyz, poly2 for circle and rbf for the copulas.
    #[arg(long, value_enum)]
    pub kernel: Option<KernelName>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub subset: SubsetArgs,
    #[arg(long, default_value_t = kmrcd::estimator::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Add a wall-clock runtime column (makes the output run-dependent).
    #[arg(long)]
    pub timings: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Fit(args) => commands::fit(&args, false),
        Command::Detect(args) => commands::fit(&args, true),
        Command::Gram(args) => commands::gram(&args),
        Command::Simulate(args) => commands::simulate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
