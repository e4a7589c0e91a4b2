use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Community detection in multilayer networks.
#[derive(Debug, Parser)]
#[command(name = "mlmod", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one algorithm at one parameter point and write the result file.
    Detect(DetectArgs),
    /// Run one detection per coupling strength and emit a cells x runs label table.
    Sweep(SweepArgs),
    /// Compare algorithms over a grid of coupling densities.
    Compare(CompareArgs),
    /// Write normalized multiplex files, flattening an aspect grid if given.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Edge file, dataset manifest (`*.manifest`) or `builtin:karate`.
    #[arg(long)]
    pub input: String,
    /// Layer file `layerId aspectId label`.
    #[arg(long)]
    pub layers_file: Option<PathBuf>,
    /// Coupling file `nodeId layerA aspectA layerB aspectB [magnitude]`.
    #[arg(long)]
    pub couplings_file: Option<PathBuf>,
    /// Declared node count; ids above it are rejected, unused ids become isolated nodes.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// With `builtin:karate`: number of identical, fully coupled layers.
    #[arg(long)]
    pub replica_layers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Parameter file (TOML); flags below override its values.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Resolution per layer, or one value for all.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub gamma: Vec<f64>,
    /// Layer weights, or one value for all.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambda: Vec<f64>,
    /// Positive-part resolution (signed networks).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub gamma_plus: Vec<f64>,
    /// Negative-part resolution (signed networks).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub gamma_minus: Vec<f64>,
    #[arg(long, value_parser = ["uniform", "closeness", "temporal", "explicit"])]
    pub coupling_strategy: Option<String>,
    /// Dense layer closeness matrix for the closeness strategy.
    #[arg(long)]
    pub closeness_file: Option<PathBuf>,
    /// Report Q divided by the total weight instead of raw Q.
    #[arg(long)]
    pub normalized: bool,
    #[arg(long, default_value_t = 1)]
    pub min_community_size: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Kernighan-Lin refinement of every spectral bisection.
    #[arg(long)]
    pub refine: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Louvain restarts.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "mspec")]
    pub algorithm: String,
    /// Coupling strength.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub omega: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "mspec")]
    pub algorithm: String,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [0.0, 0.01, 0.1, 1.0, 10.0])]
    pub omega: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = ["mspec".to_string(), "mlouv".to_string(), "smean".to_string(), "sfull".to_string()])]
    pub algorithm: Vec<String>,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [1.0])]
    pub omega: Vec<f64>,
    /// Coupling densities; defaults to 0, 0.1, ..., 1.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub rho: Vec<f64>,
    /// Coupling draws per density, seeded `seed`, `seed + 1`, ...
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Edge file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, conflicts_with = "grid_file")]
    pub layers_file: Option<PathBuf>,
    /// Grid layer file `layerId label c_1 ... c_F`.
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
    /// Couplings (`nodeId layerA layerB` over grid layer ids with `--grid-file`).
    #[arg(long)]
    pub couplings_file: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Output file stem.
    #[arg(long, default_value = "network")]
    pub name: String,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Worker threads for grid points; defaults to the number of CPUs.
pub const WORKERS_ENV: &str = "MLMOD_WORKERS";

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Detect(a) => commands::detect(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Convert(a) => commands::convert(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                mlmod::Error::NoConvergence { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
