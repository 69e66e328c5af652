//! Clustering-based initialization of a multi-centroid associative memory.
//!
//! Each class is clustered on its own with K-means under dot similarity; the
//! centroids become that class's initial columns. Columns left over after the
//! first round are handed out one class at a time, always to the class the
//! current (quantized) memory misses most often on the training set, until
//! the memory has exactly `cols` columns.
//!
//! K-means scores a sample against the direction of each centroid: with all
//! samples being ±1 vectors of norm √D, maximizing `s · c / |c|` is the
//! spherical form of dot-similarity clustering, and it makes the objective
//! `Σ s · ĉ` non-decreasing in every iteration. The centroids returned are
//! the plain arithmetic means of the assigned expansions.

use ndarray::{Array2, Axis};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;

use crate::encoding::EncodedSet;
use crate::error::{Error, Result};
use crate::hv::{BitHypervector, ClassMap, FloatAm};
use crate::inference::{evaluate, ConfusionMatrix};
use crate::rng::{self, Stream};
use crate::training::{quantize_am, ThresholdMode};

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    /// Fraction of `cols` filled by the first clustering round, in (0, 1].
    pub ratio: f64,
    pub cols: usize,
    pub classes: usize,
    pub seed: u64,
    pub max_kmeans_iters: usize,
    /// Classes granted one extra column per allocation round.
    pub alloc_batch: usize,
    pub threshold_mode: ThresholdMode,
}

impl InitConfig {
    pub fn new(ratio: f64, cols: usize, classes: usize, seed: u64) -> Self {
        Self {
            ratio,
            cols,
            classes,
            seed,
            max_kmeans_iters: 100,
            alloc_batch: 1,
            threshold_mode: ThresholdMode::GlobalMean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 {
            return Err(Error::ZeroDimension("class count"));
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(Error::Config(format!(
                "initial cluster ratio {} must lie in (0, 1]",
                self.ratio
            )));
        }
        if self.cols < self.classes {
            return Err(Error::Config(format!(
                "{} columns cannot hold {} classes",
                self.cols, self.classes
            )));
        }
        if self.alloc_batch == 0 {
            return Err(Error::ZeroDimension("allocation batch"));
        }
        if self.max_kmeans_iters == 0 {
            return Err(Error::ZeroDimension("K-means iteration limit"));
        }
        Ok(())
    }
}

/// `n = max(1, floor(cols * ratio / classes))`.
pub fn initial_clusters_per_class(cfg: &InitConfig) -> Result<usize> {
    cfg.validate()?;
    let n = (cfg.cols as f64 * cfg.ratio / cfg.classes as f64).floor() as usize;
    Ok(n.max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    /// Arithmetic means of the assigned ±1 expansions.
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// `Σ s · ĉ` after each iteration's update step.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub reseeds: usize,
    pub converged: bool,
}

fn expand(samples: &[&BitHypervector], dim: usize) -> Array2<f64> {
    let mut x = Array2::<f64>::zeros((samples.len(), dim));
    for (mut row, s) in x.axis_iter_mut(Axis(0)).zip(samples) {
        let slice = row.as_slice_mut().expect("standard layout");
        slice.fill(-1.0);
        s.accumulate_into(slice, 1.0).expect("dims checked");
        // accumulate adds ±1 on top of -1: map {0, -2} back to {+1, -1}
        slice.iter_mut().for_each(|v| *v = if *v == 0.0 { 1.0 } else { -1.0 });
    }
    x
}

/// k-means++ style seeding with squared Hamming distance. Returns distinct
/// sample indices.
fn seed_centers(samples: &[&BitHypervector], n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let first = rng.random_range(0..samples.len());
    let mut chosen = vec![first];
    let mut taken = vec![false; samples.len()];
    taken[first] = true;
    let mut dist: Vec<f64> = samples
        .iter()
        .map(|s| (s.hamming(samples[first]).expect("dims checked") as f64).powi(2))
        .collect();
    while chosen.len() < n {
        let total: f64 = dist
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .map(|(_, d)| d)
            .sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                if taken[i] || d == 0.0 {
                    continue;
                }
                pick = Some(i);
                target -= d;
                if target < 0.0 {
                    break;
                }
            }
            pick.expect("positive mass")
        } else {
            // Only duplicates of existing centers remain.
            let free: Vec<usize> = (0..samples.len()).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        taken[next] = true;
        chosen.push(next);
        for (d, s) in dist.iter_mut().zip(samples) {
            let h = (s.hamming(samples[next]).expect("dims checked") as f64).powi(2);
            if h < *d {
                *d = h;
            }
        }
    }
    chosen
}

fn unit_rows(sums: &Array2<f64>) -> Array2<f64> {
    let mut out = sums.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    out
}

/// K-means under dot similarity over binary samples.
pub fn kmeans_dot(samples: &[&BitHypervector], n: usize, seed: u64, max_iters: usize) -> Result<KMeans> {
    if n == 0 {
        return Err(Error::ZeroDimension("cluster count"));
    }
    let first = samples.first().ok_or(Error::Empty("sample set"))?;
    let dim = first.dim();
    if let Some(s) = samples.iter().find(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: s.dim(),
        });
    }
    if n > samples.len() {
        return Err(Error::TooManyClusters {
            requested: n,
            available: samples.len(),
        });
    }
    let x = expand(samples, dim);
    let mut rng = rng::prng(seed);
    let seeds = seed_centers(samples, n, &mut rng);

    // Cluster sums; their directions are the centroid directions.
    let mut sums = Array2::<f64>::zeros((n, dim));
    for (c, &i) in seeds.iter().enumerate() {
        sums.row_mut(c).assign(&x.row(i));
    }
    let mut assignments = vec![usize::MAX; samples.len()];
    let mut objective = Vec::new();
    let mut reseeds = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        let directions = unit_rows(&sums);
        let scores = x.dot(&directions.t());

        let mut next: Vec<usize> = scores
            .axis_iter(Axis(0))
            .map(|row| {
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect();

        let mut sizes = vec![0usize; n];
        for &a in &next {
            sizes[a] += 1;
        }
        let mut reseeded = false;
        for empty in 0..n {
            if sizes[empty] > 0 {
                continue;
            }
            // Farthest sample from its centroid, taken from a cluster that
            // keeps at least one member.
            let mut pick: Option<(f64, usize)> = None;
            for (i, &a) in next.iter().enumerate() {
                if sizes[a] < 2 {
                    continue;
                }
                let s = scores[(i, a)];
                if pick.is_none_or(|(best, _)| s < best) {
                    pick = Some((s, i));
                }
            }
            let (_, i) = pick.expect("n <= samples guarantees a donor");
            sizes[next[i]] -= 1;
            next[i] = empty;
            sizes[empty] = 1;
            reseeds += 1;
            reseeded = true;
        }

        let stable = !reseeded && next == assignments;
        assignments = next;

        sums.fill(0.0);
        for (i, &a) in assignments.iter().enumerate() {
            let mut row = sums.row_mut(a);
            row += &x.row(i);
        }
        objective.push(sums.axis_iter(Axis(0)).map(|r| r.dot(&r).sqrt()).sum());

        if stable {
            converged = true;
            break;
        }
    }

    let mut sizes = vec![0usize; n];
    for &a in &assignments {
        sizes[a] += 1;
    }
    let centroids = sums
        .axis_iter(Axis(0))
        .zip(&sizes)
        .map(|(row, &size)| row.iter().map(|v| v / size as f64).collect())
        .collect();
    Ok(KMeans {
        centroids,
        assignments,
        objective,
        iterations,
        reseeds,
        converged,
    })
}

fn class_seed(seed: u64, class: usize, n: usize) -> u64 {
    rng::derive_seed(seed, Stream::Init) ^ ((class as u64) << 32 | n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn cluster_class(
    samples: &[&BitHypervector],
    class: usize,
    n: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Vec<Vec<f64>>> {
    if samples.is_empty() {
        return Err(Error::EmptyClass(class));
    }
    if samples.len() < n {
        return Err(Error::TooFewSamples {
            class,
            requested: n,
            available: samples.len(),
        });
    }
    Ok(kmeans_dot(samples, n, class_seed(seed, class, n), max_iters)?.centroids)
}

fn assemble(dim: usize, classes: usize, per_class: Vec<Vec<Vec<f64>>>) -> Result<FloatAm> {
    let mut labels = Vec::new();
    let mut columns = Vec::new();
    for (class, cents) in per_class.into_iter().enumerate() {
        labels.extend(std::iter::repeat_n(class, cents.len()));
        columns.extend(cents);
    }
    FloatAm::from_columns(dim, columns, ClassMap::new(labels, classes)?)
}

/// Clusters every class separately; columns are grouped by class in class
/// order.
pub fn classwise_cluster(set: &EncodedSet, per_class_n: &[usize], cfg: &InitConfig) -> Result<FloatAm> {
    if per_class_n.len() != set.classes {
        return Err(Error::DimensionMismatch {
            expected: set.classes,
            actual: per_class_n.len(),
        });
    }
    let total: usize = per_class_n.iter().sum();
    if total > cfg.cols {
        return Err(Error::Config(format!(
            "{total} initial clusters exceed {} columns",
            cfg.cols
        )));
    }
    let groups = set.by_class();
    let per_class = groups
        .par_iter()
        .zip(per_class_n)
        .enumerate()
        .map(|(class, (samples, &n))| cluster_class(samples, class, n, cfg.seed, cfg.max_kmeans_iters))
        .collect::<Result<Vec<_>>>()?;
    assemble(set.dim, set.classes, per_class)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationStep {
    pub misses: Vec<u64>,
    /// Classes that received one more column this round.
    pub granted: Vec<usize>,
}

/// Hands out the remaining columns by misprediction count until the memory
/// holds exactly `cfg.cols` columns. Returns the memory and one entry per
/// round.
pub fn allocate_clusters(am: FloatAm, set: &EncodedSet, cfg: &InitConfig) -> Result<(FloatAm, Vec<AllocationStep>)> {
    cfg.validate()?;
    if am.cols() > cfg.cols {
        return Err(Error::Config(format!(
            "memory already has {} columns, more than {}",
            am.cols(),
            cfg.cols
        )));
    }
    let groups = set.by_class();
    let mut counts = am.class_map().counts();
    let mut centroids: Vec<Vec<Vec<f64>>> = (0..counts.len())
        .map(|c| am.class_map().columns_of(c).map(|j| am.column(j).to_vec()).collect())
        .collect();
    let mut current = am;
    let mut steps = Vec::new();

    while current.cols() < cfg.cols {
        let bam = quantize_am(&current, cfg.threshold_mode);
        let confusion: ConfusionMatrix = evaluate(&bam, set)?.confusion;
        let misses = confusion.misses();

        let mut candidates: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] < groups[c].len()).collect();
        if candidates.is_empty() {
            return Err(Error::Config(format!(
                "cannot fill {} columns: every class already has one column per sample",
                cfg.cols
            )));
        }
        candidates.sort_by(|&a, &b| misses[b].cmp(&misses[a]).then(a.cmp(&b)));
        let room = cfg.cols - current.cols();
        let mut granted: Vec<usize> = candidates.into_iter().take(cfg.alloc_batch.min(room)).collect();
        granted.sort_unstable();

        let refreshed = granted
            .par_iter()
            .map(|&c| cluster_class(&groups[c], c, counts[c] + 1, cfg.seed, cfg.max_kmeans_iters))
            .collect::<Result<Vec<_>>>()?;
        for (&c, cents) in granted.iter().zip(refreshed) {
            counts[c] += 1;
            centroids[c] = cents;
        }
        current = assemble(current.dim(), counts.len(), centroids.clone())?;
        steps.push(AllocationStep { misses, granted });
    }
    Ok((current, steps))
}

#[derive(Debug, Clone)]
pub struct InitReport {
    pub initial_per_class: usize,
    pub steps: Vec<AllocationStep>,
}

/// Classwise clustering followed by allocation of the remaining columns.
pub fn clustering_init(set: &EncodedSet, cfg: &InitConfig) -> Result<(FloatAm, InitReport)> {
    cfg.validate()?;
    if set.classes != cfg.classes {
        return Err(Error::DimensionMismatch {
            expected: cfg.classes,
            actual: set.classes,
        });
    }
    let n = initial_clusters_per_class(cfg)?;
    let am = classwise_cluster(set, &vec![n; cfg.classes], cfg)?;
    let (am, steps) = allocate_clusters(am, set, cfg)?;
    Ok((
        am,
        InitReport {
            initial_per_class: n,
            steps,
        },
    ))
}

/// Baseline initialization: `cfg.cols` distinct training samples, at least
/// one per class, used directly as ±1 columns.
pub fn random_sampling_init(set: &EncodedSet, cfg: &InitConfig) -> Result<FloatAm> {
    cfg.validate()?;
    if cfg.cols > set.len() {
        return Err(Error::TooManyClusters {
            requested: cfg.cols,
            available: set.len(),
        });
    }
    let mut rng = rng::prng(rng::derive_seed(cfg.seed, Stream::Init) ^ 0x5241_4e44);
    let mut taken = vec![false; set.len()];
    let mut picks = Vec::with_capacity(cfg.cols);
    for class in 0..set.classes {
        let members: Vec<usize> = (0..set.len()).filter(|&i| set.labels[i] == class).collect();
        let &i = members.choose(&mut rng).ok_or(Error::EmptyClass(class))?;
        taken[i] = true;
        picks.push(i);
    }
    let mut rest: Vec<usize> = (0..set.len()).filter(|&i| !taken[i]).collect();
    rest.shuffle(&mut rng);
    picks.extend(rest.into_iter().take(cfg.cols - set.classes));
    picks.sort_by_key(|&i| (set.labels[i], i));

    let labels = picks.iter().map(|&i| set.labels[i]).collect();
    let columns = picks.iter().map(|&i| set.hvs[i].to_bipolar()).collect();
    FloatAm::from_columns(set.dim, columns, ClassMap::new(labels, set.classes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hv(rng: &mut impl Rng, dim: usize) -> BitHypervector {
        BitHypervector::from_bits((0..dim).map(|_| rng.random::<bool>())).unwrap()
    }

    fn noisy_copies(rng: &mut impl Rng, proto: &BitHypervector, count: usize, noise: f64) -> Vec<BitHypervector> {
        (0..count)
            .map(|_| {
                let mut h = proto.clone();
                for j in 0..h.dim() {
                    if rng.random::<f64>() < noise {
                        h.set_bit(j, !h.bit(j));
                    }
                }
                h
            })
            .collect()
    }

    #[test]
    fn cluster_count_formula() {
        let n = |cols, ratio, classes| initial_clusters_per_class(&InitConfig::new(ratio, cols, classes, 0)).unwrap();
        assert_eq!(n(512, 0.8, 10), 40);
        assert_eq!(n(128, 0.1, 26), 1);
        assert_eq!(n(128, 1.0, 26), 4);
        assert_eq!(10 * n(128, 0.9, 10), 110);
    }

    #[test]
    fn config_validation() {
        assert!(InitConfig::new(0.0, 10, 2, 0).validate().is_err());
        assert!(InitConfig::new(1.5, 10, 2, 0).validate().is_err());
        assert!(InitConfig::new(0.5, 1, 2, 0).validate().is_err());
        assert!(InitConfig::new(1.0, 2, 2, 0).validate().is_ok());
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let mut rng = rng::prng(1);
        let hvs: Vec<_> = (0..9).map(|_| random_hv(&mut rng, 40)).collect();
        let refs: Vec<_> = hvs.iter().collect();
        let km = kmeans_dot(&refs, 1, 3, 100).unwrap();
        for j in 0..40 {
            let mean = hvs.iter().map(|h| h.sign(j) as f64).sum::<f64>() / 9.0;
            assert!((km.centroids[0][j] - mean).abs() < 1e-12);
        }
        assert!(km.converged);
    }

    #[test]
    fn identical_samples_give_their_expansion() {
        let mut rng = rng::prng(2);
        let h = random_hv(&mut rng, 70);
        let refs = vec![&h; 5];
        let km = kmeans_dot(&refs, 1, 0, 10).unwrap();
        assert_eq!(km.centroids[0], h.to_bipolar());
    }

    #[test]
    fn kmeans_errors() {
        let mut rng = rng::prng(3);
        let hvs: Vec<_> = (0..3).map(|_| random_hv(&mut rng, 16)).collect();
        let refs: Vec<_> = hvs.iter().collect();
        assert!(matches!(
            kmeans_dot(&refs, 4, 0, 10),
            Err(Error::TooManyClusters { .. })
        ));
        assert!(kmeans_dot(&[], 1, 0, 10).is_err());
        let other = random_hv(&mut rng, 17);
        assert!(kmeans_dot(&[&hvs[0], &other], 1, 0, 10).is_err());
    }

    #[test]
    fn duplicates_still_fill_every_cluster() {
        let mut rng = rng::prng(4);
        let h = random_hv(&mut rng, 32);
        let g = random_hv(&mut rng, 32);
        let refs = vec![&h, &h, &h, &g];
        let km = kmeans_dot(&refs, 3, 9, 20).unwrap();
        let mut sizes = [0; 3];
        km.assignments.iter().for_each(|&a| sizes[a] += 1);
        assert!(sizes.iter().all(|&s| s > 0));
    }

    /// Spherical Lloyd iterations from a random partition, written with
    /// plain loops. Returns the final objective `Σ_c |Σ_{s∈c} s|`.
    fn naive_lloyd(x: &[Vec<f64>], n: usize, rng: &mut impl Rng) -> f64 {
        let dim = x[0].len();
        let mut assign: Vec<usize> = (0..x.len()).map(|_| rng.random_range(0..n)).collect();
        let sums = |assign: &[usize]| -> Vec<Vec<f64>> {
            let mut sums = vec![vec![0.0; dim]; n];
            for (i, &a) in assign.iter().enumerate() {
                for j in 0..dim {
                    sums[a][j] += x[i][j];
                }
            }
            sums
        };
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for _ in 0..100 {
            let s = sums(&assign);
            let next: Vec<usize> = x
                .iter()
                .map(|xi| {
                    let mut best = (f64::NEG_INFINITY, 0);
                    for (c, sc) in s.iter().enumerate() {
                        let m = norm(sc);
                        let v = if m > 0.0 {
                            xi.iter().zip(sc).map(|(a, b)| a * b).sum::<f64>() / m
                        } else {
                            0.0
                        };
                        if v > best.0 {
                            best = (v, c);
                        }
                    }
                    best.1
                })
                .collect();
            if next == assign {
                break;
            }
            assign = next;
        }
        sums(&assign).iter().map(|s| norm(s)).sum()
    }

    #[test]
    fn two_clusters_reach_restart_oracle() {
        let mut rng = rng::prng(5);
        let mut oracle_rng = rng::prng(99);
        for trial in 0..10 {
            let a = random_hv(&mut rng, 16);
            let b = random_hv(&mut rng, 16);
            let mut hvs = noisy_copies(&mut rng, &a, 4, 0.1);
            hvs.extend(noisy_copies(&mut rng, &b, 4, 0.1));
            let refs: Vec<_> = hvs.iter().collect();
            let km = kmeans_dot(&refs, 2, trial, 100).unwrap();
            let x: Vec<Vec<f64>> = hvs.iter().map(|h| h.to_bipolar()).collect();
            let oracle = (0..500)
                .map(|_| naive_lloyd(&x, 2, &mut oracle_rng))
                .fold(f64::NEG_INFINITY, f64::max);
            let got = *km.objective.last().unwrap();
            assert!(got >= oracle - 1e-9, "trial {trial}: {got} vs {oracle}");
        }
    }

    #[test]
    fn objective_never_decreases() {
        let mut rng = rng::prng(6);
        for trial in 0..30 {
            let hvs: Vec<_> = (0..60).map(|_| random_hv(&mut rng, 48)).collect();
            let refs: Vec<_> = hvs.iter().collect();
            let km = kmeans_dot(&refs, 1 + trial % 7, trial as u64, 50).unwrap();
            for w in km.objective.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{:?}", km.objective);
            }
        }
    }

    fn clustered_set(rng: &mut impl Rng, classes: usize, per_class: usize, dim: usize) -> EncodedSet {
        let mut hvs = Vec::new();
        let mut labels = Vec::new();
        for c in 0..classes {
            let modes: Vec<_> = (0..3).map(|_| random_hv(rng, dim)).collect();
            for i in 0..per_class {
                hvs.extend(noisy_copies(rng, &modes[i % 3], 1, 0.15));
                labels.push(c);
            }
        }
        EncodedSet::new(dim, classes, hvs, labels).unwrap()
    }

    #[test]
    fn classwise_means_with_one_cluster() {
        let mut rng = rng::prng(7);
        let set = clustered_set(&mut rng, 2, 12, 64);
        let cfg = InitConfig::new(1.0, 2, 2, 0);
        let fam = classwise_cluster(&set, &[1, 1], &cfg).unwrap();
        assert_eq!(fam.cols(), 2);
        for c in 0..2 {
            for j in 0..64 {
                let mean: f64 = set
                    .iter()
                    .filter(|(_, l)| *l == c)
                    .map(|(h, _)| h.sign(j) as f64)
                    .sum::<f64>()
                    / 12.0;
                assert!((fam.get(j, c) - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_sample_per_cluster_reproduces_samples() {
        let mut rng = rng::prng(8);
        let set = clustered_set(&mut rng, 2, 3, 64);
        let cfg = InitConfig::new(1.0, 6, 2, 0);
        let fam = classwise_cluster(&set, &[3, 3], &cfg).unwrap();
        for j in 0..6 {
            let col = fam.column(j);
            assert!(set.hvs.iter().any(|h| h.to_bipolar() == col));
        }
    }

    #[test]
    fn classwise_errors_name_the_class() {
        let mut rng = rng::prng(9);
        let hvs: Vec<_> = (0..4).map(|_| random_hv(&mut rng, 32)).collect();
        let set = EncodedSet::new(32, 3, hvs, vec![0, 0, 2, 2]).unwrap();
        let cfg = InitConfig::new(1.0, 3, 3, 0);
        assert!(matches!(
            classwise_cluster(&set, &[1, 1, 1], &cfg),
            Err(Error::EmptyClass(1))
        ));
        let cfg = InitConfig::new(1.0, 9, 3, 0);
        assert!(matches!(
            classwise_cluster(&set, &[3, 0, 1], &cfg),
            Err(Error::TooFewSamples { class: 0, .. })
        ));
    }

    #[test]
    fn allocation_fills_every_column() {
        let mut rng = rng::prng(10);
        let set = clustered_set(&mut rng, 3, 30, 64);
        let cfg = InitConfig::new(0.5, 12, 3, 4);
        let start = classwise_cluster(&set, &[2, 2, 2], &cfg).unwrap();
        let (fam, steps) = allocate_clusters(start.clone(), &set, &cfg).unwrap();
        assert_eq!(fam.cols(), 12);
        assert_eq!(steps.len(), 6);
        assert!(fam.class_map().counts().iter().all(|&c| c >= 1));

        let (same, none) = allocate_clusters(fam.clone(), &set, &cfg).unwrap();
        assert_eq!(same, fam);
        assert!(none.is_empty());

        let cfg11 = InitConfig { cols: 7, ..cfg.clone() };
        let (one, steps) = allocate_clusters(start, &set, &cfg11).unwrap();
        assert_eq!(one.cols(), 7);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].granted.len(), 1);
    }

    #[test]
    fn allocation_goes_to_most_missed_class() {
        let mut rng = rng::prng(11);
        let set = clustered_set(&mut rng, 3, 30, 64);
        let cfg = InitConfig::new(0.5, 4, 3, 2);
        let start = classwise_cluster(&set, &[1, 1, 1], &cfg).unwrap();
        let (fam, steps) = allocate_clusters(start, &set, &cfg).unwrap();
        let misses = &steps[0].misses;
        let max = *misses.iter().max().unwrap();
        let expect = misses.iter().position(|&m| m == max).unwrap();
        assert_eq!(steps[0].granted, vec![expect]);
        assert_eq!(fam.class_map().counts()[expect], 2);
    }

    #[test]
    fn clustering_init_is_deterministic() {
        let mut rng = rng::prng(12);
        let set = clustered_set(&mut rng, 3, 20, 64);
        let cfg = InitConfig::new(0.6, 10, 3, 7);
        let (a, ra) = clustering_init(&set, &cfg).unwrap();
        let (b, _) = clustering_init(&set, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra.initial_per_class, 2);
        assert_eq!(a.cols(), 10);
    }

    #[test]
    fn random_sampling_covers_every_class() {
        let mut rng = rng::prng(13);
        let set = clustered_set(&mut rng, 4, 10, 32);
        let cfg = InitConfig::new(1.0, 9, 4, 1);
        let fam = random_sampling_init(&set, &cfg).unwrap();
        assert_eq!(fam.cols(), 9);
        assert!(fam.class_map().counts().iter().all(|&c| c >= 1));
        for col in fam.columns() {
            assert!(set.hvs.iter().any(|h| h.to_bipolar() == col));
        }
        assert_eq!(fam, random_sampling_init(&set, &cfg).unwrap());
    }
}
