use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use halfspace_core::datasets::NoiseSpec;
use halfspace_core::proper::SearchMode;
use halfspace_core::LabelMode;

mod commands;
mod sweep;
mod verify;

/// Proper agnostic learning of halfspaces and ReLUs under Gaussian marginals.
#[derive(Parser, Debug)]
#[command(name = "halfspace", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a labeled dataset from a planted model and write it as CSV.
    Generate(GenerateArgs),
    /// Polynomial regression + influence subspace + grid search.
    LearnHalfspace(LearnHalfspaceArgs),
    /// Localized PTAS for homogeneous halfspaces.
    Ptas(PtasArgs),
    /// Proper ReLU regression.
    LearnRelu(LearnReluArgs),
    /// Run a suite of numerical invariant checks.
    Verify(VerifyArgs),
    /// Run the halfspace learner over a parameter grid and write one CSV row per run.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; defaults to a file named after the subcommand in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "AGNOSTIC_OUTPUT_DIR", default_value = ".")]
    pub output_dir: PathBuf,
}

impl OutputArgs {
    pub fn path(&self, default_name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| self.output_dir.join(default_name))
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "halfspace")]
    pub kind: LabelMode,
    /// clean | rcn:<rate> | band:<width> | far:<budget>:<radius> | additive:<amplitude>
    #[arg(long, default_value = "clean")]
    pub model: NoiseSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Planted normal as comma-separated values; drawn from the seed if absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w_star: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t_star: f64,
    /// Also write the planted model and its population OPT as JSON.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out CSV for the reported test error.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Metadata written by `generate --meta`; fills in the population OPT.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct LearnHalfspaceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub search: Option<SearchModeArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_regression: Option<usize>,
    #[arg(long)]
    pub n_holdout: Option<usize>,
    /// Angular resolution of the exhaustive OPT oracle (d ≤ 3), run on the test set.
    #[arg(long)]
    pub oracle_resolution: Option<f64>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum SearchModeArg {
    Subspace,
    BruteForce,
    Auto,
}

impl From<SearchModeArg> for SearchMode {
    fn from(s: SearchModeArg) -> Self {
        match s {
            SearchModeArg::Subspace => SearchMode::Subspace,
            SearchModeArg::BruteForce => SearchMode::BruteForce,
            SearchModeArg::Auto => SearchMode::Auto,
        }
    }
}

#[derive(Args, Debug)]
pub struct PtasArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub inner_eps: Option<f64>,
    #[arg(long)]
    pub inner_degree: Option<usize>,
    #[arg(long)]
    pub inner_eta: Option<f64>,
}

#[derive(Args, Debug)]
pub struct LearnReluArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: verify::Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Parameter to vary: degree, noise or eps.
    #[arg(long)]
    pub param: sweep::Param,
    /// Comma-separated values; empty gives a header-only CSV.
    #[arg(long, value_delimiter = ',', default_value = "")]
    pub values: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,
    #[arg(long, default_value_t = 20_000)]
    pub n_test: usize,
    /// Seeds per value.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise model for degree and eps sweeps.
    #[arg(long, default_value = "clean")]
    pub model: NoiseSpec,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// Largest number of runs accepted.
    #[arg(long, default_value_t = 1000)]
    pub cap: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Exit status: 0 on success, 1 when a run finished but flagged a failed check.
pub enum Status {
    Ok,
    Flagged,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::LearnHalfspace(a) => commands::learn_halfspace(&a),
        Command::Ptas(a) => commands::ptas(&a),
        Command::LearnRelu(a) => commands::learn_relu(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Sweep(a) => sweep::run(&a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Flagged) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
