use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use osir_core::estimators::{DimChoice, Method};

#[derive(Parser, Debug)]
#[command(name = "osir", version, about = "Sliced inverse regression toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Seed for every random stream
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Ridge added to the covariance diagonal
    #[arg(long, global = true, default_value_t = 0.0, value_parser = non_negative)]
    pub ridge: f64,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads (defaults to available parallelism)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate the dimension-reduction subspace of a CSV dataset
    Fit(FitArgs),
    /// Monte Carlo study on the benchmark models
    Simulate(SimulateArgs),
    /// Run the reference benchmark suites and compare against reference values
    Bench(BenchArgs),
    /// Train/test evaluation on the Boston housing data
    Housing(HousingArgs),
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV file with a header row
    #[arg(long)]
    pub input: PathBuf,

    /// Name of the response column
    #[arg(long)]
    pub response: String,

    /// sir, osir, osirL, cume or cume-mean
    #[arg(long, default_value = "osir", value_parser = parse_method)]
    pub method: Method,

    /// Number of slices H
    #[arg(long, default_value_t = 10)]
    pub slices: usize,

    /// Overlap level L for osir (defaults to floor(H/2))
    #[arg(long)]
    pub level: Option<usize>,

    /// Structural dimension: auto or a positive integer
    #[arg(long, default_value = "auto", value_parser = parse_dim)]
    pub dim: DimChoice,

    /// Override the BIC penalty constant
    #[arg(long, value_parser = non_negative)]
    pub penalty: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Benchmark model ids (1-4), comma separated or repeated
    #[arg(long, value_delimiter = ',', required = true)]
    pub model: Vec<u8>,

    /// Methods, comma separated or repeated
    #[arg(long, value_delimiter = ',', default_value = "sir", value_parser = parse_method)]
    pub method: Vec<Method>,

    /// Slice counts, comma separated or repeated
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub slices: Vec<usize>,

    /// Overlap level for a bare `osir` (defaults to floor(H/2))
    #[arg(long)]
    pub level: Option<usize>,

    /// Replications
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    /// Override the model's sample size
    #[arg(long)]
    pub n: Option<usize>,

    /// Override the model's predictor dimension
    #[arg(long)]
    pub p: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// table1, table2, table3 or all
    #[arg(long, default_value = "all")]
    pub suite: String,

    /// Replications (bands widen when fewer than 1000)
    #[arg(long)]
    pub reps: Option<usize>,

    /// Use the full 1000 replications
    #[arg(long, conflicts_with = "reps")]
    pub full: bool,
}

#[derive(Args, Debug)]
pub struct HousingArgs {
    /// Housing CSV with the 14 canonical columns
    #[arg(long)]
    pub input: PathBuf,

    /// Random train/test splits
    #[arg(long, default_value_t = 100)]
    pub reps: usize,

    /// Neighbours for kNN
    #[arg(long, default_value_t = 5)]
    pub knn_k: usize,

    /// Methods, comma separated (defaults to SIR and OSIR at L = 1,2,3,5,10,15,19)
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub method: Vec<Method>,

    #[arg(long, default_value_t = 20)]
    pub slices: usize,

    /// Directions kept for prediction
    #[arg(long, default_value_t = 4)]
    pub dim: usize,

    #[arg(long, default_value_t = 200)]
    pub train_size: usize,
}

/// `osir` without a level is resolved later against H.
fn parse_method(s: &str) -> Result<Method, String> {
    if s.trim().eq_ignore_ascii_case("osir") {
        return Ok(Method::Osir { level: usize::MAX });
    }
    s.parse().map_err(|e: osir_core::OsirError| e.to_string())
}

fn parse_dim(s: &str) -> Result<DimChoice, String> {
    s.parse().map_err(|e: osir_core::OsirError| e.to_string())
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite value >= 0, got {s}"))
    }
}

/// Replaces the unresolved `osir` placeholder with an explicit level.
pub fn resolve_method(method: Method, level: Option<usize>, slices: usize) -> Method {
    match method {
        Method::Osir { level: usize::MAX } => Method::Osir {
            level: level.unwrap_or(slices / 2),
        },
        other => other,
    }
}
