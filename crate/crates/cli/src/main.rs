//! `lenp` — command-line front end: corpus ingestion, training, local and
//! global explanations, explanation-quality metrics, the biased-model
//! experiment and report rendering.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod bias;
mod config;
mod eval;
mod explain;
mod ingest;
mod output;
mod report;
mod svg;
mod train;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] lenp::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(lenp::Error::Numerical(_)) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "lenp", version, about = "Logic explanations for multi-label text classifiers")]
struct Cli {
    /// Base seed for every random choice; overrides the config file.
    #[arg(long, global = true, env = "LENP_SEED")]
    seed: Option<u64>,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Tokenize a JSON-lines corpus (or generate one), build the vocabulary,
    /// encode and split; optionally plant noisy features.
    Ingest(IngestArgs),
    /// Train the entropy network, directly or distilled from a random forest.
    Train(TrainArgs),
    /// Explain one document or a whole class.
    Explain(ExplainArgs),
    /// Faithfulness (AUC-MoRF) and robustness (max-sensitivity) of the
    /// explanation strategies on test documents.
    EvalMetrics(EvalArgs),
    /// Biased-model detection experiment.
    BiasExp(BiasArgs),
    /// Consolidate a run directory into tables and plots.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    /// JSON-lines corpus: {"text": ..., "labels": [...]} per line.
    #[arg(long, required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Generate a synthetic dataset with this many rows instead.
    #[arg(long, conflicts_with = "input")]
    synthetic: Option<usize>,
    /// Which synthetic dataset to generate.
    #[arg(long, value_enum, default_value = "tags")]
    task: TaskArg,
    /// Number of input bits of the `and` task.
    #[arg(long, default_value_t = 10)]
    dims: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    max_features: Option<usize>,
    #[arg(long)]
    min_df: Option<usize>,
    /// Class names to keep, in order (default: all labels, sorted).
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<String>>,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    fractions: Option<Vec<f64>>,
    #[arg(long)]
    noise_count: Option<usize>,
    #[arg(long)]
    p_target: Option<f64>,
    #[arg(long)]
    p_other: Option<f64>,
    /// Class whose training and validation rows carry the noisy features.
    #[arg(long)]
    target_class: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TaskArg {
    /// Programming posts with tags.
    Tags,
    /// Fair random bits labelled `y = x1 ∧ x2`.
    And,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OptimizerArg {
    Momentum,
    Adam,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    /// Directory written by `ingest`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fit a random forest and distill the network from its predictions.
    #[arg(long)]
    explain_blackbox: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Weight of the entropy penalty.
    #[arg(long)]
    lambda: Option<f64>,
    /// Temperature of the importance softmax.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerArg>,
    /// Number of trees of the black-box forest.
    #[arg(long)]
    trees: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum StrategyArg {
    Len,
    Lenp,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AggArg {
    Greedy,
    Powerset,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ObjectiveArg {
    Accuracy,
    F1,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SplitArg {
    Train,
    Val,
    Test,
}

#[derive(Debug, Args, Serialize)]
struct ExplainArgs {
    #[command(subcommand)]
    scope: ExplainScope,
}

#[derive(Debug, Args, Serialize)]
struct ExplainCommon {
    #[arg(long)]
    data: PathBuf,
    /// Directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Class name, e.g. `c#`.
    #[arg(long)]
    class: String,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Threshold the raw softmax scores instead of the max-normalized ones.
    #[arg(long)]
    alpha_raw: bool,
    /// Also write the JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum ExplainScope {
    /// One document.
    Local {
        #[command(flatten)]
        common: ExplainCommon,
        /// Row index within the split.
        #[arg(long)]
        input: usize,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// A whole class: aggregate the most frequent local explanations.
    Global {
        #[command(flatten)]
        common: ExplainCommon,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum)]
        agg: Option<AggArg>,
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
    },
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of test documents explained.
    #[arg(long)]
    n_explained: Option<usize>,
    /// Length of the most-relevant-first perturbation curve.
    #[arg(long)]
    morf_length: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    n_perturbations: Option<usize>,
    /// Skip max-sensitivity (faster).
    #[arg(long)]
    no_sensitivity: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SettingArg {
    S1,
    S2,
}

#[derive(Debug, Args, Serialize)]
struct BiasArgs {
    #[arg(long, value_enum)]
    setting: SettingArg,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    /// Directory holding `eval-metrics` and/or `bias-exp` outputs.
    #[arg(long)]
    run: PathBuf,
    /// Where to write the report (default: the run directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = config::RunConfig::resolve(cli.config.as_deref(), cli.seed)?;
    match &cli.command {
        Command::Ingest(a) => ingest::run(a, cfg, &cli.command),
        Command::Train(a) => train::run(a, cfg, &cli.command),
        Command::Explain(a) => explain::run(a, cfg),
        Command::EvalMetrics(a) => eval::run(a, cfg, &cli.command),
        Command::BiasExp(a) => bias::run(a, cfg, &cli.command),
        Command::Report(a) => report::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
