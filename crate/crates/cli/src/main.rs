use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpsim_core::clustering::ClusterMethod;
use gpsim_core::similarity::Measure;
use gpsim_core::synth::Sampling;
use gpsim_core::ErrorKind;

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "gpsim",
    version,
    about = "GP likelihood-ratio similarity for sparse time courses"
)]
struct Cli {
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, env = "GPSIM_JOBS", default_value_t = 0)]
    jobs: usize,

    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic three-profile dataset
    Synth(SynthArgs),
    /// Fit shared GP hyperparameters to a dataset
    Fit(FitArgs),
    /// Compute a pairwise similarity or distance matrix
    Similarity(SimilarityArgs),
    /// Cluster a similarity or distance matrix
    Cluster(ClusterArgs),
    /// Score a clustering against ground truth and/or biological similarity
    Evaluate(EvaluateArgs),
    /// Run the repeated synthetic benchmark
    Experiment(ExperimentArgs),
}

#[derive(clap::Args, Debug)]
pub struct SynthArgs {
    /// TOML config; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset output (wide CSV for shared grids, long CSV otherwise)
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth labels output
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub n_per_profile: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub sampling: Option<Sampling>,
    /// Candidate numbers of removed points in async mode
    #[arg(long, value_delimiter = ',')]
    pub dropout: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(clap::Args, Debug)]
pub struct FitArgs {
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Subtract each course's mean before fitting
    #[arg(long)]
    pub center: bool,
    /// Rescale the time axis to [0, 1] before fitting
    #[arg(long)]
    pub normalize_time: bool,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(clap::Args, Debug)]
pub struct SimilarityArgs {
    pub data: PathBuf,
    /// Model file from `fit` (required for gp and bregman)
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "gp")]
    pub measure: Measure,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct ClusterArgs {
    pub matrix: PathBuf,
    #[arg(long, default_value = "spectral")]
    pub method: ClusterMethod,
    /// Number of clusters
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Neighbours per node in the spectral kNN graph
    #[arg(long, default_value_t = 7)]
    pub knn: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct EvaluateArgs {
    /// Labels file to score
    pub labels: PathBuf,
    /// Ground-truth labels (NMI)
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Biological similarity matrix (BHI and its z-score)
    #[arg(long)]
    pub bio: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n_random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(clap::Args, Debug)]
pub struct ExperimentArgs {
    /// TOML experiment spec; flags override its values
    pub spec: Option<PathBuf>,
    /// Directory for results.csv, summary.csv and comparisons.csv
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub sampling: Option<Sampling>,
    #[arg(long, value_delimiter = ',')]
    pub noise: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub measures: Option<Vec<Measure>>,
    #[arg(long, value_delimiter = ',')]
    pub clusterers: Option<Vec<ClusterMethod>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub knn: Option<usize>,
    #[arg(long)]
    pub n_per_profile: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.jobs);
            return ExitCode::from(1);
        }
    };
    let result = pool.install(|| match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Fit(a) => commands::fit(a),
        Command::Similarity(a) => commands::similarity(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Experiment(a) => commands::experiment(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
            })
        }
    }
}
