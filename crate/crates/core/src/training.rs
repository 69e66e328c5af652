//! Associative-memory quantization and quantization-aware iterative learning.
//!
//! Training keeps two views of the memory: a floating-point AM that receives
//! the updates and a binary AM, obtained by thresholding, that decides which
//! samples are mispredicted. One epoch walks the training set in a seeded
//! shuffle order and, for every sample the binary AM gets wrong, moves the
//! best true-class column toward the sample and the winning wrong column away
//! from it. The binary AM is then rebuilt from the normalized float AM.

use rand::seq::SliceRandom;

use crate::encoding::EncodedSet;
use crate::error::{Error, Result};
use crate::hv::{argmax_tiebreak, check_dims, BinaryAm, BitHypervector, ClassMap, FloatAm};
use crate::inference::evaluate;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdMode {
    /// One threshold: the mean of every entry in the AM.
    #[default]
    GlobalMean,
    PerColumnMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizeMode {
    /// Center each column, then scale it to unit variance (L2 norm `sqrt(D)`).
    #[default]
    Standardize,
    /// Center each column, then scale it to unit L2 norm.
    UnitNorm,
    None,
}

impl NormalizeMode {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "standardize" => Ok(Self::Standardize),
            "unit-norm" => Ok(Self::UnitNorm),
            "none" => Ok(Self::None),
            other => Err(Error::Config(format!("unknown normalization `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Standardize => "standardize",
            Self::UnitNorm => "unit-norm",
            Self::None => "none",
        }
    }
}

/// When the binary AM is rebuilt from the float AM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefreshCadence {
    /// Updated columns are normalized and re-binarized right after each
    /// update; the whole AM is refreshed at the end of the epoch.
    #[default]
    Sample,
    /// The binary AM is held fixed for the whole epoch.
    Epoch,
}

impl RefreshCadence {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sample" => Ok(Self::Sample),
            "epoch" => Ok(Self::Epoch),
            other => Err(Error::Config(format!("unknown refresh cadence `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sample => "sample",
            Self::Epoch => "epoch",
        }
    }
}

impl ThresholdMode {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "global-mean" => Ok(Self::GlobalMean),
            "column-mean" => Ok(Self::PerColumnMean),
            other => Err(Error::Config(format!("unknown threshold mode `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::GlobalMean => "global-mean",
            Self::PerColumnMean => "column-mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub threshold_mode: ThresholdMode,
    pub normalize_mode: NormalizeMode,
    pub refresh: RefreshCadence,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            epochs: 100,
            seed: 0,
            shuffle: true,
            threshold_mode: ThresholdMode::GlobalMean,
            normalize_mode: NormalizeMode::Standardize,
            refresh: RefreshCadence::Sample,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }
}

/// Thresholds the float AM at its mean (strictly greater maps to 1).
pub fn quantize_am(fam: &FloatAm, mode: ThresholdMode) -> BinaryAm {
    let columns: Vec<BitHypervector> = match mode {
        ThresholdMode::GlobalMean => {
            let mu = mean(fam.values());
            fam.columns().map(|c| threshold(c, mu)).collect()
        }
        ThresholdMode::PerColumnMean => fam.columns().map(|c| threshold(c, mean(c))).collect(),
    };
    BinaryAm::from_columns(&columns, fam.class_map().clone()).expect("shape carried over")
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn threshold(column: &[f64], mu: f64) -> BitHypervector {
    BitHypervector::from_bits(column.iter().map(|&v| v > mu)).expect("non-empty column")
}

/// Centers each column and rescales it; all-constant columns become zero.
pub fn normalize_am(fam: &mut FloatAm, mode: NormalizeMode) {
    for column in fam.columns_mut() {
        normalize_column(column, mode);
    }
}

fn normalize_column(column: &mut [f64], mode: NormalizeMode) {
    let target = match mode {
        NormalizeMode::None => return,
        NormalizeMode::Standardize => (column.len() as f64).sqrt(),
        NormalizeMode::UnitNorm => 1.0,
    };
    let mu = mean(column);
    column.iter_mut().for_each(|v| *v -= mu);
    let norm = column.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        let scale = target / norm;
        column.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Re-binarizes single columns between full refreshes.
struct ColumnRefresher {
    mode: ThresholdMode,
    sums: Vec<f64>,
    entries: f64,
}

impl ColumnRefresher {
    fn new(fam: &FloatAm, mode: ThresholdMode) -> Self {
        Self {
            mode,
            sums: fam.columns().map(|c| c.iter().sum()).collect(),
            entries: fam.values().len() as f64,
        }
    }

    fn refresh(&mut self, fam: &mut FloatAm, bam: &mut BinaryAm, j: usize, normalize: NormalizeMode) {
        let column = fam.column_mut(j);
        normalize_column(column, normalize);
        self.sums[j] = column.iter().sum();
        let mu = match self.mode {
            ThresholdMode::GlobalMean => self.sums.iter().sum::<f64>() / self.entries,
            ThresholdMode::PerColumnMean => mean(column),
        };
        bam.set_column(j, &threshold(column, mu)).expect("same dimension");
    }
}

/// Which columns an update touches: `(class, column)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateTargets {
    pub predicted: (usize, usize),
    pub true_target: (usize, usize),
}

/// Columns grouped by class, precomputed once per AM layout.
struct ClassColumns(Vec<Vec<usize>>);

impl ClassColumns {
    fn new(map: &ClassMap) -> Self {
        Self((0..map.classes()).map(|c| map.columns_of(c).collect()).collect())
    }

    fn of(&self, class: usize) -> Result<&[usize]> {
        match self.0.get(class) {
            Some(cols) if !cols.is_empty() => Ok(cols),
            _ => Err(Error::UnknownClass(class)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TargetRule {
    /// Best column overall vs best column of the true class.
    MultiCentroid,
    /// One column per class: predicted class column vs true class column.
    SingleCentroid,
}

fn targets_from_scores(
    map: &ClassMap,
    by_class: &ClassColumns,
    scores: &[i64],
    true_class: usize,
    rule: TargetRule,
) -> Result<Option<UpdateTargets>> {
    let true_cols = by_class.of(true_class)?;
    let m = argmax_tiebreak(scores)?;
    let predicted_class = map.label(m);
    if predicted_class == true_class {
        return Ok(None);
    }
    let n = match rule {
        TargetRule::MultiCentroid => {
            let mut best = true_cols[0];
            for &j in &true_cols[1..] {
                if scores[j] > scores[best] {
                    best = j;
                }
            }
            best
        }
        TargetRule::SingleCentroid => true_cols[0],
    };
    Ok(Some(UpdateTargets {
        predicted: (predicted_class, m),
        true_target: (true_class, n),
    }))
}

/// Picks the update targets for one sample, or `None` when the binary AM
/// already predicts `true_class`.
pub fn select_update_targets(am: &BinaryAm, h: &BitHypervector, true_class: usize) -> Result<Option<UpdateTargets>> {
    let by_class = ClassColumns::new(am.class_map());
    let mut scores = vec![0; am.cols()];
    am.similarities_into(h, &mut scores)?;
    targets_from_scores(
        am.class_map(),
        &by_class,
        &scores,
        true_class,
        TargetRule::MultiCentroid,
    )
}

/// Adds `lr * h` to the true-target column and subtracts it from the
/// predicted column.
pub fn apply_update(fam: &mut FloatAm, targets: &UpdateTargets, h: &BitHypervector, lr: f64) -> Result<()> {
    check_dims(fam.dim(), h.dim())?;
    h.accumulate_into(fam.column_mut(targets.true_target.1), lr)?;
    h.accumulate_into(fam.column_mut(targets.predicted.1), -lr)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub updates: usize,
    /// Training accuracy of the binary AM produced at the end of this epoch.
    pub train_accuracy: f64,
}

/// Outcome of a single pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassStats {
    pub updates: usize,
    /// Fraction of samples the binary AM predicted correctly when they were
    /// visited. With epoch cadence this is the exact training accuracy of the
    /// binary AM passed in.
    pub observed_accuracy: f64,
}

fn epoch_order(n: usize, cfg: &TrainConfig, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if cfg.shuffle {
        let seed = rng::derive_seed(cfg.seed, rng::Stream::Train) ^ (epoch as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        order.shuffle(&mut rng::prng(seed));
    }
    order
}

fn run_epoch(
    fam: &mut FloatAm,
    bam: &BinaryAm,
    set: &EncodedSet,
    cfg: &TrainConfig,
    epoch: usize,
    rule: TargetRule,
) -> Result<(BinaryAm, PassStats)> {
    check_dims(fam.dim(), set.dim)?;
    check_dims(fam.cols(), bam.cols())?;
    if set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let map = fam.class_map().clone();
    let by_class = ClassColumns::new(&map);
    let mut current = bam.clone();
    let mut refresher = ColumnRefresher::new(fam, cfg.threshold_mode);
    let mut scores = vec![0i64; map.len()];
    let mut updates = 0;
    let mut correct = 0;
    for i in epoch_order(set.len(), cfg, epoch) {
        let h = &set.hvs[i];
        current.similarities_into(h, &mut scores)?;
        match targets_from_scores(&map, &by_class, &scores, set.labels[i], rule)? {
            None => correct += 1,
            Some(t) => {
                apply_update(fam, &t, h, cfg.lr)?;
                updates += 1;
                if cfg.refresh == RefreshCadence::Sample {
                    refresher.refresh(fam, &mut current, t.true_target.1, cfg.normalize_mode);
                    refresher.refresh(fam, &mut current, t.predicted.1, cfg.normalize_mode);
                }
            }
        }
    }
    normalize_am(fam, cfg.normalize_mode);
    let next = quantize_am(fam, cfg.threshold_mode);
    Ok((
        next,
        PassStats {
            updates,
            observed_accuracy: correct as f64 / set.len() as f64,
        },
    ))
}

/// One pass of quantization-aware learning. `epoch` only selects the shuffle
/// order. Returns the rebuilt binary AM.
pub fn train_epoch(
    fam: &mut FloatAm,
    bam: &BinaryAm,
    set: &EncodedSet,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<(BinaryAm, PassStats)> {
    run_epoch(fam, bam, set, cfg, epoch, TargetRule::MultiCentroid)
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Training accuracy of the binary AM before any update.
    pub initial_accuracy: f64,
    pub history: Vec<EpochStats>,
    pub best: BinaryAm,
    /// 0 when the initial AM was never beaten.
    pub best_epoch: usize,
    pub best_accuracy: f64,
    pub final_binary: BinaryAm,
    pub final_float: FloatAm,
}

impl TrainReport {
    /// `epoch,updates,train_acc` rows, epoch 0 being the initial AM.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,updates,train_acc\n");
        out.push_str(&format!("0,0,{:.6}\n", self.initial_accuracy));
        for s in &self.history {
            out.push_str(&format!("{},{},{:.6}\n", s.epoch, s.updates, s.train_accuracy));
        }
        out
    }

    /// Accuracy after `epoch` epochs (0 = initial).
    pub fn accuracy_at(&self, epoch: usize) -> Option<f64> {
        if epoch == 0 {
            Some(self.initial_accuracy)
        } else {
            self.history.get(epoch - 1).map(|s| s.train_accuracy)
        }
    }
}

/// Called with the binary AM entering training (epoch 0) and after every epoch.
pub type EpochObserver<'a> = dyn FnMut(usize, &BinaryAm) -> Result<()> + 'a;

fn train_loop(
    mut fam: FloatAm,
    set: &EncodedSet,
    cfg: &TrainConfig,
    rule: TargetRule,
    observer: &mut EpochObserver<'_>,
) -> Result<TrainReport> {
    cfg.validate()?;
    check_dims(fam.dim(), set.dim)?;
    if set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut bam = quantize_am(&fam, cfg.threshold_mode);
    let exact_pass = cfg.refresh == RefreshCadence::Epoch;

    let mut initial_accuracy = None;
    let mut history: Vec<EpochStats> = Vec::with_capacity(cfg.epochs);
    let mut best = (f64::NEG_INFINITY, 0usize, bam.clone());
    let mut consider = |acc: f64, epoch: usize, am: &BinaryAm| {
        if acc > best.0 {
            best = (acc, epoch, am.clone());
        }
    };

    observer(0, &bam)?;
    for epoch in 1..=cfg.epochs {
        let (next, pass) = run_epoch(&mut fam, &bam, set, cfg, epoch, rule)?;
        observer(epoch, &next)?;
        if exact_pass {
            // The pass measured the AM that entered it.
            match history.last_mut() {
                Some(prev) => prev.train_accuracy = pass.observed_accuracy,
                None => initial_accuracy = Some(pass.observed_accuracy),
            }
            consider(pass.observed_accuracy, epoch - 1, &bam);
            history.push(EpochStats {
                epoch,
                updates: pass.updates,
                train_accuracy: f64::NAN,
            });
        } else {
            if initial_accuracy.is_none() {
                let acc = evaluate(&bam, set)?.accuracy;
                initial_accuracy = Some(acc);
                consider(acc, 0, &bam);
            }
            let acc = evaluate(&next, set)?.accuracy;
            consider(acc, epoch, &next);
            history.push(EpochStats {
                epoch,
                updates: pass.updates,
                train_accuracy: acc,
            });
        }
        bam = next;
    }

    let final_acc = match (history.last_mut(), exact_pass) {
        (Some(last), true) => {
            let acc = evaluate(&bam, set)?.accuracy;
            last.train_accuracy = acc;
            Some(acc)
        }
        (Some(last), false) => Some(last.train_accuracy),
        (None, _) => None,
    };
    let initial_accuracy = match initial_accuracy {
        Some(a) => a,
        None => {
            let acc = evaluate(&bam, set)?.accuracy;
            consider(acc, 0, &bam);
            acc
        }
    };
    if let Some(acc) = final_acc {
        consider(acc, cfg.epochs, &bam);
    }
    let (best_accuracy, best_epoch, best) = best;
    Ok(TrainReport {
        initial_accuracy,
        history,
        best,
        best_epoch,
        best_accuracy,
        final_binary: bam,
        final_float: fam,
    })
}

/// Quantizes `fam`, then runs `cfg.epochs` epochs of multi-centroid
/// quantization-aware learning, tracking the best binary AM by training
/// accuracy.
pub fn fit(fam: FloatAm, set: &EncodedSet, cfg: &TrainConfig) -> Result<TrainReport> {
    train_loop(fam, set, cfg, TargetRule::MultiCentroid, &mut |_, _| Ok(()))
}

/// [`fit`] that also hands every epoch's binary AM to `observer`, e.g. to
/// track held-out accuracy.
pub fn fit_observed(
    fam: FloatAm,
    set: &EncodedSet,
    cfg: &TrainConfig,
    observer: &mut EpochObserver<'_>,
) -> Result<TrainReport> {
    train_loop(fam, set, cfg, TargetRule::MultiCentroid, observer)
}

/// Classic iterative HDC learning with one column per class.
pub fn iterative_train_basic(fam: FloatAm, set: &EncodedSet, cfg: &TrainConfig) -> Result<TrainReport> {
    let counts = fam.class_map().counts();
    if let Some(class) = counts.iter().position(|&c| c != 1) {
        return Err(Error::Config(format!(
            "basic training needs exactly one column per class; class {class} has {}",
            counts[class]
        )));
    }
    train_loop(fam, set, cfg, TargetRule::SingleCentroid, &mut |_, _| Ok(()))
}

/// Class vectors as plain sums of the ±1 expansions of their samples.
pub fn single_pass_train(set: &EncodedSet) -> Result<FloatAm> {
    let map = ClassMap::identity(set.classes)?;
    let mut fam = FloatAm::zeros(set.dim, map)?;
    let mut seen = vec![false; set.classes];
    for (h, label) in set.iter() {
        h.accumulate_into(fam.column_mut(label), 1.0)?;
        seen[label] = true;
    }
    if let Some(class) = seen.iter().position(|&s| !s) {
        return Err(Error::EmptyClass(class));
    }
    Ok(fam)
}
