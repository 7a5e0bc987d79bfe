//! The `ara` command-line tool.
//!
//! Exit codes: 0 on success, 2 for usage and configuration errors, 1 for
//! failures while running a command.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::encoder::Pooling;
use crate::ensemble::EnsembleComposition;
use crate::training::EncoderKind;

pub use config::{parse_sizes, EnsembleConfig, FeaturesConfig, PathsConfig, RunConfig, SplitConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(crate::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ara", version, about = "Sentence readability regression with model ensembles")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Root seed all randomness is derived from.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for member training, prediction and resampling.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write cross-validation split manifests.
    Split(SplitArgs),
    /// Train ensemble members on one fold or on the whole corpus.
    Train(TrainArgs),
    /// Score sentences with trained members and their filtered ensemble.
    Predict(PredictArgs),
    /// Compare ensemble predictions with gold labels.
    Evaluate(EvaluateArgs),
    /// Bootstrap study of ensemble size and composition.
    EnsembleStudy(StudyArgs),
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Directory receiving `fold_<k>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub early_stop_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Directory receiving `member_<i>.json` and `member_<i>.bin`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory of split manifests written by `ara split`.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// Train on the training part of this fold.
    #[arg(long, conflicts_with = "final_model", required_unless_present = "final_model")]
    pub fold: Option<usize>,
    /// Train on the whole corpus with a small early-stopping carve.
    #[arg(long = "final")]
    pub final_model: bool,
    #[arg(long)]
    pub members: Option<usize>,
    #[arg(long, value_enum)]
    pub encoder: Option<EncoderKind>,
    #[arg(long, value_enum)]
    pub pooling: Option<Pooling>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Embedding JSONL for the precomputed encoder.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Directory with `member_<i>` checkpoints.
    #[arg(long)]
    pub checkpoints: PathBuf,
    /// CSV with `id,sentence` columns.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Score only the validation sentences of this split manifest.
    #[arg(long, value_name = "MANIFEST")]
    pub validation: Option<PathBuf>,
    #[arg(long)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Corpus CSV with the gold scores.
    #[arg(long)]
    pub labels: PathBuf,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Directory with `labels.csv` and `fold_<k>/{a,b}.csv`.
    #[arg(long)]
    pub pool: PathBuf,
    /// Report CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-size curve table; defaults to the report path with a `.dat` extension.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub composition: Vec<EnsembleComposition>,
    /// Ensemble sizes, e.g. `1..60` or `1,5,20,60`.
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub floor: Option<f64>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
