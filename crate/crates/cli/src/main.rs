mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use embedscope_core::importance::ImportanceMetric;
use embedscope_core::learners::Kind;

/// Embedding quality metrics, linear probes and pre-trained model
/// recommendation.
///
/// Exit codes: 0 success, 2 invalid input, 3 runtime failure.
#[derive(Debug, Parser)]
#[command(name = "embedscope", version)]
pub struct Cli {
    /// TOML run configuration; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed applied to every seeded component.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HistKind {
    Value,
    L2norm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Permutation,
    Shapley,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the thirteen metrics of one embedding set.
    Metrics {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histogram of embedding values or row L2 norms as CSV.
    Hist {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = HistKind::Value)]
        kind: HistKind,
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
        bins: u64,
        #[arg(long, value_enum, default_value_t = Split::Train)]
        split: Split,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the logistic probe and report test AUC, accuracy, F1 and MCC.
    Probe {
        manifest: PathBuf,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        /// Train on raw features instead of standardized ones.
        #[arg(long)]
        no_standardize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resample every dataset, compute metrics and probe AUCs, and write the
    /// labelled recommendation dataset.
    BuildDataset {
        /// Text file listing manifest paths, one per line.
        #[arg(long)]
        manifests: Option<PathBuf>,
        /// Manifest path (repeatable).
        #[arg(long = "manifest")]
        manifest: Vec<PathBuf>,
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        train_size: Option<usize>,
        #[arg(long)]
        test_size: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Fit one classifier on the training partition of a recommendation
    /// dataset.
    TrainRecommender {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "rf")]
        kind: Kind,
        /// Fit on every row instead of the training partition.
        #[arg(long)]
        all: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Score all five classifiers on the test partition, or run
    /// leave-one-dataset-out for a single classifier.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        /// Hold out this dataset id and train on the rest.
        #[arg(long)]
        leave_out: Option<String>,
        /// Classifier used with --leave-out.
        #[arg(long, default_value = "rf")]
        kind: Kind,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Rank candidate PTMs with a trained model.
    Recommend {
        #[arg(long)]
        model: PathBuf,
        /// CSV with a ptm_id column and the thirteen metric columns.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long, default_value_t = 3)]
        top_k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank the metric features by their contribution to a trained model.
    Importance {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Permutation)]
        method: Method,
        #[arg(long)]
        metric: Option<ImportanceMetric>,
        /// Shuffles per feature, or sampled orderings for shapley.
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<embedscope_core::Error>() {
        Some(e) if !e.is_input_error() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
