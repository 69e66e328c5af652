//! Load, encode, initialize, train and evaluate: the steps shared by every
//! experiment command.

use memhd_core::data::{load_dataset, LabeledDataset};
use memhd_core::format::{cache_path, load_dataset_cache, save_dataset, ModelFile, TrainingMeta};
use memhd_core::init::{clustering_init, random_sampling_init, InitConfig};
use memhd_core::rng::{derive_seed, Stream};
use memhd_core::training::{fit_observed, quantize_am, single_pass_train, TrainConfig, TrainReport};
use memhd_core::{encode_dataset, evaluate, BinaryAm, EncodedSet, Encoder, EncoderParams, FloatAm};

use crate::config::{InitKind, Settings};
use crate::error::Result;

pub struct Splits {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

/// Reads the dataset, going through the cache when one is configured.
pub fn load_splits(s: &Settings) -> Result<Splits> {
    let cached = s.cache_dir.as_ref().map(|dir| {
        (
            cache_path(dir, s.dataset.name(), "train"),
            cache_path(dir, s.dataset.name(), "test"),
        )
    });
    let (train, test) = match &cached {
        Some((tr, te)) if tr.exists() && te.exists() => (load_dataset_cache(tr)?, load_dataset_cache(te)?),
        _ => {
            let (train, test) = load_dataset(s.dataset, &s.data_dir)?;
            if let Some((tr, te)) = &cached {
                save_dataset(tr, &train)?;
                save_dataset(te, &test)?;
            }
            (train, test)
        }
    };
    let limit = |ds: LabeledDataset, n: Option<usize>| match n {
        Some(n) if n < ds.len() => ds.head(n),
        _ => ds,
    };
    Ok(Splits {
        train: limit(train, s.train_limit),
        test: limit(test, s.test_limit),
    })
}

pub struct Encoded {
    pub params: EncoderParams,
    pub train: EncodedSet,
    pub test: EncodedSet,
}

/// Projection encoder whose seed is derived from the trial's master seed.
pub fn encode_splits(splits: &Splits, dim: usize, master_seed: u64) -> Result<Encoded> {
    let params = EncoderParams::projection(derive_seed(master_seed, Stream::Encoder), splits.train.features(), dim);
    let encoder = Encoder::new(&params)?;
    Ok(Encoded {
        params,
        train: encode_dataset(&encoder, &splits.train)?,
        test: encode_dataset(&encoder, &splits.test)?,
    })
}

pub fn init_config(s: &Settings, cols: usize, ratio: f64, master_seed: u64) -> InitConfig {
    InitConfig {
        max_kmeans_iters: s.max_kmeans_iters,
        alloc_batch: s.alloc_batch,
        threshold_mode: s.threshold,
        ..InitConfig::new(ratio, cols, s.dataset.classes(), master_seed)
    }
}

pub fn initialize(kind: InitKind, cfg: &InitConfig, train: &EncodedSet) -> Result<FloatAm> {
    Ok(match kind {
        InitKind::Cluster => clustering_init(train, cfg)?.0,
        InitKind::Random => random_sampling_init(train, cfg)?,
    })
}

pub fn train_config(s: &Settings, master_seed: u64) -> TrainConfig {
    TrainConfig {
        lr: s.lr,
        epochs: s.epochs,
        seed: master_seed,
        shuffle: true,
        threshold_mode: s.threshold,
        normalize_mode: s.normalize,
        refresh: s.refresh,
    }
}

pub struct Trial {
    pub seed: u64,
    pub report: TrainReport,
    /// Test accuracy of the binary AM after each epoch, epoch 0 first.
    pub test_curve: Vec<f64>,
    /// Test accuracy of the best (by training accuracy) model.
    pub test_accuracy: f64,
    pub model: ModelFile,
}

impl Trial {
    pub fn train_accuracy(&self) -> f64 {
        self.report.best_accuracy
    }
}

/// One full run: encode, initialize, train, evaluate.
pub fn run_trial(
    s: &Settings,
    splits: &Splits,
    shape: (usize, usize),
    ratio: f64,
    init: InitKind,
    master_seed: u64,
) -> Result<Trial> {
    let (dim, cols) = shape;
    let enc = encode_splits(splits, dim, master_seed)?;
    let icfg = init_config(s, cols, ratio, master_seed);
    let fam = initialize(init, &icfg, &enc.train)?;
    train_encoded(s, &enc, fam, ratio, master_seed)
}

pub fn train_encoded(s: &Settings, enc: &Encoded, fam: FloatAm, ratio: f64, master_seed: u64) -> Result<Trial> {
    let tcfg = train_config(s, master_seed);
    let mut test_curve = Vec::with_capacity(s.epochs + 1);
    let report = fit_observed(fam, &enc.train, &tcfg, &mut |_, am| {
        test_curve.push(evaluate(am, &enc.test)?.accuracy);
        Ok(())
    })?;
    let test_accuracy = test_curve[report.best_epoch];
    let model = ModelFile {
        encoder: enc.params,
        am: report.best.clone(),
        meta: TrainingMeta {
            learning_rate: s.lr,
            epochs: s.epochs,
            ratio,
            dataset: s.dataset.name().to_string(),
            train_accuracy: Some(report.best_accuracy),
            test_accuracy: Some(test_accuracy),
        },
    };
    Ok(Trial {
        seed: master_seed,
        report,
        test_curve,
        test_accuracy,
        model,
    })
}

/// Single-pass baseline with one binarized column per class.
pub struct Baseline {
    pub am: BinaryAm,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

pub fn single_pass_baseline(s: &Settings, splits: &Splits, dim: usize, master_seed: u64) -> Result<Baseline> {
    let enc = encode_splits(splits, dim, master_seed)?;
    let am = quantize_am(&single_pass_train(&enc.train)?, s.threshold);
    Ok(Baseline {
        train_accuracy: evaluate(&am, &enc.train)?.accuracy,
        test_accuracy: evaluate(&am, &enc.test)?.accuracy,
        am,
    })
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
