//! Associative search and accuracy evaluation.

use rayon::prelude::*;

use crate::encoding::EncodedSet;
use crate::error::{Error, Result};
use crate::hv::{argmax_tiebreak, check_dims, BinaryAm, BitHypervector};

/// `counts[t][p]` = samples of true class `t` predicted as `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.classes + predicted] += 1;
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.classes..(truth + 1) * self.classes]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|c| self.get(c, c)).sum()
    }

    /// Off-diagonal row sums: how often each true class was missed.
    pub fn misses(&self) -> Vec<u64> {
        (0..self.classes)
            .map(|t| self.row(t).iter().sum::<u64>() - self.get(t, t))
            .collect()
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub n_samples: usize,
}

/// Index of the most similar column (lowest index on ties).
pub fn best_column(am: &BinaryAm, q: &BitHypervector, scratch: &mut [i64]) -> Result<usize> {
    am.similarities_into(q, scratch)?;
    argmax_tiebreak(scratch)
}

/// Class of the most similar column.
pub fn predict(am: &BinaryAm, q: &BitHypervector) -> Result<usize> {
    let mut scratch = vec![0; am.cols()];
    let j = best_column(am, q, &mut scratch)?;
    Ok(am.class_map().label(j))
}

/// Accuracy and confusion matrix over `set`. Samples are scored in parallel
/// chunks; the counters are order independent so the result is deterministic.
pub fn evaluate(am: &BinaryAm, set: &EncodedSet) -> Result<EvalResult> {
    if set.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    check_dims(am.dim(), set.dim)?;
    let classes = am.class_map().classes().max(set.classes);
    let confusion = set
        .hvs
        .par_chunks(512)
        .zip(set.labels.par_chunks(512))
        .map(|(hvs, labels)| -> Result<ConfusionMatrix> {
            let mut local = ConfusionMatrix::new(classes);
            let mut scratch = vec![0; am.cols()];
            for (h, &truth) in hvs.iter().zip(labels) {
                let j = best_column(am, h, &mut scratch)?;
                local.record(truth, am.class_map().label(j));
            }
            Ok(local)
        })
        .try_reduce(|| ConfusionMatrix::new(classes), |a, b| Ok(a.merge(b)))?;
    let n_samples = set.len();
    Ok(EvalResult {
        accuracy: confusion.trace() as f64 / n_samples as f64,
        confusion,
        n_samples,
    })
}
