use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(
    name = "memhd",
    version,
    about = "Multi-centroid binary HDC training and IMC cost reports"
)]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Initialize and train a model, then save it.
    Train(TrainArgs),
    /// Evaluate a saved model, or rerun training over several seeds.
    Eval(EvalArgs),
    /// Cycle, array, utilization, energy and memory reports.
    Cost(CostArgs),
    /// Test accuracy over a grid of dimensions and column counts.
    Sweep(SweepArgs),
    /// Per-epoch accuracy for clustering versus random-sampling init.
    CompareInit(CompareInitArgs),
    /// Test accuracy as a function of the initial cluster ratio.
    SweepRatio(SweepRatioArgs),
}

/// Settings shared by every command that runs the training pipeline.
#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// mnist, fmnist or isolet.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Hypervector dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Associative memory columns.
    #[arg(long)]
    pub cols: Option<usize>,
    /// Initial cluster ratio in (0, 1].
    #[arg(short = 'R', long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub alloc_batch: Option<usize>,
    #[arg(long)]
    pub max_kmeans_iters: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// standardize, unit-norm or none.
    #[arg(long)]
    pub normalize: Option<String>,
    /// sample or epoch.
    #[arg(long)]
    pub refresh: Option<String>,
    /// global-mean or column-mean.
    #[arg(long)]
    pub threshold: Option<String>,
    /// cluster or random.
    #[arg(long)]
    pub init: Option<String>,
    /// Use only the first N training samples.
    #[arg(long)]
    pub train_limit: Option<usize>,
    /// Use only the first N test samples.
    #[arg(long)]
    pub test_limit: Option<usize>,
}

impl PipelineArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            config: self.config.clone(),
            dataset: self.dataset.clone(),
            data_dir: self.data_dir.clone(),
            cache_dir: self.cache_dir.clone(),
            dim: self.dim,
            cols: self.cols,
            ratio: self.ratio,
            alloc_batch: self.alloc_batch,
            max_kmeans_iters: self.max_kmeans_iters,
            lr: self.lr,
            epochs: self.epochs,
            seed: self.seed,
            normalize: self.normalize.clone(),
            refresh: self.refresh.clone(),
            threshold: self.threshold.clone(),
            init: self.init.clone(),
            train_limit: self.train_limit,
            test_limit: self.test_limit,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Model file to write.
    #[arg(long, default_value = "model.memhd")]
    pub out: PathBuf,
    /// Per-epoch CSV report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Saved model to evaluate on the test split.
    #[arg(long, required_unless_present = "trials")]
    pub model: Option<PathBuf>,
    /// Retrain with seeds seed..seed+T-1 and report each trial.
    #[arg(long, conflicts_with = "model")]
    pub trials: Option<usize>,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostPreset {
    Mnist,
    Fmnist,
    Isolet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostView {
    /// Cycles, arrays and utilization of every mapping.
    Table,
    /// Associative-memory energy and cycles.
    Energy,
    /// Encoder and memory bits per model kind.
    Memory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[arg(long, value_enum, default_value_t = CostPreset::Mnist)]
    pub dataset: CostPreset,
    #[arg(long, value_enum, default_value_t = CostView::Table)]
    pub view: CostView,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    #[arg(long)]
    pub features: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Baseline hypervector dimension.
    #[arg(long)]
    pub basic_dim: Option<usize>,
    /// Comma-separated partition counts, e.g. `5,10`; empty for none.
    #[arg(long)]
    pub partitions: Option<String>,
    /// MEMHD dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// MEMHD columns.
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub array_rows: Option<usize>,
    #[arg(long)]
    pub array_cols: Option<usize>,
    /// Energy per array activation.
    #[arg(long)]
    pub e_read: Option<f64>,
    /// Level count for ID-Level encoders in the memory view.
    #[arg(long, default_value_t = 256)]
    pub levels: usize,
    /// Binary vectors per class for multi-model quantization.
    #[arg(long, default_value_t = 64)]
    pub models_per_class: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Comma-separated dimensions.
    #[arg(long, default_value = "64,128,256,512,1024")]
    pub dims: String,
    /// Comma-separated column counts.
    #[arg(long, default_value = "64,128,256,512,1024")]
    pub cols_list: String,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// CSV destination; rows already present are not recomputed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareInitArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepRatioArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Comma-separated ratios in (0, 1].
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
    pub ratios: String,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
