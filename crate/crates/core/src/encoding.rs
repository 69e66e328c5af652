//! Seeded encoders from feature vectors to binary hypervectors.
//!
//! Two encoders are provided. Random projection computes `raw = Mᵀx` with a
//! bipolar `f × D` matrix `M`; ID-Level sums the bound products
//! `ID_i ⊗ L(x_i)`. Both binarize with the same rule: coordinate `j` is +1
//! iff `raw_j > 0`, so an exact zero maps to bit 0.
//!
//! Random bits come from [`crate::rng::prng`] and are consumed one `u64`
//! word at a time, row by row, so `(seed, f, D)` fixes every bit.

use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::hv::{check_dims, words_for, BitHypervector};
use crate::rng::{self, Prng};

fn random_row(rng: &mut Prng, dim: usize) -> BitHypervector {
    let words = (0..words_for(dim)).map(|_| rng.next_u64()).collect();
    BitHypervector::from_words(dim, words).expect("word count matches dim")
}

fn check_finite(x: &[f32]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Bipolar random projection matrix; row `i` is the base vector of feature `i`.
#[derive(Clone)]
pub struct ProjectionMatrix {
    seed: u64,
    dim: usize,
    rows: Vec<BitHypervector>,
    // ±1.0 expansion of `rows`, row-major, for the accumulation loop.
    signs: Vec<f32>,
}

impl std::fmt::Debug for ProjectionMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectionMatrix")
            .field("seed", &self.seed)
            .field("features", &self.rows.len())
            .field("dim", &self.dim)
            .finish()
    }
}

impl PartialEq for ProjectionMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.dim == other.dim && self.rows == other.rows
    }
}

/// Draws an `f × D` bipolar projection matrix from `seed`.
pub fn generate_projection(seed: u64, features: usize, dim: usize) -> Result<ProjectionMatrix> {
    if features == 0 {
        return Err(Error::ZeroDimension("feature count"));
    }
    if dim == 0 {
        return Err(Error::ZeroDimension("hypervector dimension"));
    }
    let mut rng = rng::prng(seed);
    let rows: Vec<BitHypervector> = (0..features).map(|_| random_row(&mut rng, dim)).collect();
    let mut signs = Vec::with_capacity(features * dim);
    for row in &rows {
        signs.extend(row.iter_signs().map(|s| s as f32));
    }
    Ok(ProjectionMatrix { seed, dim, rows, signs })
}

impl ProjectionMatrix {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn features(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &BitHypervector {
        &self.rows[i]
    }

    /// Real-valued projection `Mᵀx` before binarization.
    pub fn project(&self, x: &[f32]) -> Result<Vec<f32>> {
        check_dims(self.features(), x.len())?;
        check_finite(x)?;
        let mut raw = vec![0.0f32; self.dim];
        for (&xi, row) in x.iter().zip(self.signs.chunks_exact(self.dim)) {
            if xi == 0.0 {
                continue;
            }
            for (r, &s) in raw.iter_mut().zip(row) {
                *r += s * xi;
            }
        }
        Ok(raw)
    }
}

impl ProjectionMatrix {
    /// Encodes a block of samples, sweeping the matrix in column tiles so
    /// each tile is read once per block. Per-coordinate summation order is the
    /// same as [`ProjectionMatrix::project`], so the bits are identical.
    fn encode_block(&self, samples: &[&[f32]]) -> Vec<BitHypervector> {
        const TILE: usize = 1024;
        let mut raw = vec![0.0f32; samples.len() * self.dim];
        for start in (0..self.dim).step_by(TILE) {
            let end = (start + TILE).min(self.dim);
            for (i, row) in self.signs.chunks_exact(self.dim).enumerate() {
                let tile = &row[start..end];
                for (s, x) in samples.iter().enumerate() {
                    let xi = x[i];
                    if xi == 0.0 {
                        continue;
                    }
                    let out = &mut raw[s * self.dim + start..s * self.dim + end];
                    for (r, &sign) in out.iter_mut().zip(tile) {
                        *r += sign * xi;
                    }
                }
            }
        }
        raw.chunks_exact(self.dim)
            .map(|r| BitHypervector::from_bits(r.iter().map(|&v| v > 0.0)).expect("dim >= 1"))
            .collect()
    }
}

/// Encodes `x` as `sign(Mᵀx)` with the strict-positive rule.
pub fn encode_project(m: &ProjectionMatrix, x: &[f32]) -> Result<BitHypervector> {
    let raw = m.project(x)?;
    BitHypervector::from_bits(raw.iter().map(|&r| r > 0.0))
}

/// Random ID vectors per feature position and correlated level vectors.
///
/// Level 0 is random; level `l` flips the first `round(l * D / (2 (L - 1)))`
/// coordinates of a seeded permutation, so the extreme levels differ in about
/// half of their coordinates and neighbouring levels stay close.
#[derive(Clone, Debug, PartialEq)]
pub struct IdLevelTables {
    seed: u64,
    dim: usize,
    id_rows: Vec<BitHypervector>,
    level_rows: Vec<BitHypervector>,
}

pub fn generate_id_level(seed: u64, features: usize, levels: usize, dim: usize) -> Result<IdLevelTables> {
    if features == 0 {
        return Err(Error::ZeroDimension("feature count"));
    }
    if levels == 0 {
        return Err(Error::ZeroDimension("level count"));
    }
    if dim == 0 {
        return Err(Error::ZeroDimension("hypervector dimension"));
    }
    let mut rng = rng::prng(seed);
    let id_rows = (0..features).map(|_| random_row(&mut rng, dim)).collect();
    let base = random_row(&mut rng, dim);
    let mut order: Vec<usize> = (0..dim).collect();
    order.shuffle(&mut rng);
    let level_rows = (0..levels)
        .map(|l| {
            let flips = if levels == 1 {
                0
            } else {
                ((l * dim) as f64 / (2.0 * (levels - 1) as f64)).round() as usize
            };
            let mut row = base.clone();
            for &j in &order[..flips] {
                row.set_bit(j, !row.bit(j));
            }
            row
        })
        .collect();
    Ok(IdLevelTables {
        seed,
        dim,
        id_rows,
        level_rows,
    })
}

impl IdLevelTables {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn features(&self) -> usize {
        self.id_rows.len()
    }

    pub fn levels(&self) -> usize {
        self.level_rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id_row(&self, i: usize) -> &BitHypervector {
        &self.id_rows[i]
    }

    pub fn level_row(&self, l: usize) -> &BitHypervector {
        &self.level_rows[l]
    }

    /// Level index for a value in `[0, 1]`: `min(L - 1, floor(x * L))`.
    pub fn level_index(&self, x: f32) -> usize {
        let l = self.levels();
        ((x as f64 * l as f64).floor() as usize).min(l - 1)
    }
}

/// Encodes `x` (values in `[0, 1]`) as `sign(Σ ID_i ⊗ L(x_i))`.
pub fn encode_id_level(t: &IdLevelTables, x: &[f32]) -> Result<BitHypervector> {
    check_dims(t.features(), x.len())?;
    check_finite(x)?;
    if let Some((index, &v)) = x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfUnitRange { index, value: v as f64 });
    }
    let mut acc = vec![0i32; t.dim];
    for (i, &xi) in x.iter().enumerate() {
        let id = t.id_rows[i].words();
        let level = t.level_rows[t.level_index(xi)].words();
        for (w, chunk) in acc.chunks_mut(64).enumerate() {
            let mut bound = !(id[w] ^ level[w]);
            for slot in chunk {
                *slot += if bound & 1 == 1 { 1 } else { -1 };
                bound >>= 1;
            }
        }
    }
    BitHypervector::from_bits(acc.iter().map(|&a| a > 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Projection,
    IdLevel,
}

impl EncoderKind {
    pub fn code(self) -> u8 {
        match self {
            Self::Projection => 0,
            Self::IdLevel => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Self::Projection),
            1 => Ok(Self::IdLevel),
            other => Err(Error::Format(format!("unknown encoder kind {other}"))),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "projection" | "rp" => Ok(Self::Projection),
            "id-level" | "idlevel" => Ok(Self::IdLevel),
            other => Err(Error::Config(format!("unknown encoder {other:?}"))),
        }
    }
}

/// Everything needed to regenerate an encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderParams {
    pub kind: EncoderKind,
    pub seed: u64,
    pub features: usize,
    pub dim: usize,
    /// Level count; ignored by the projection encoder.
    pub levels: usize,
}

impl EncoderParams {
    pub fn projection(seed: u64, features: usize, dim: usize) -> Self {
        Self {
            kind: EncoderKind::Projection,
            seed,
            features,
            dim,
            levels: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    Projection(ProjectionMatrix),
    IdLevel(IdLevelTables),
}

impl Encoder {
    pub fn new(params: &EncoderParams) -> Result<Self> {
        match params.kind {
            EncoderKind::Projection => {
                generate_projection(params.seed, params.features, params.dim).map(Self::Projection)
            }
            EncoderKind::IdLevel => {
                generate_id_level(params.seed, params.features, params.levels, params.dim).map(Self::IdLevel)
            }
        }
    }

    pub fn params(&self) -> EncoderParams {
        match self {
            Self::Projection(m) => EncoderParams::projection(m.seed, m.features(), m.dim),
            Self::IdLevel(t) => EncoderParams {
                kind: EncoderKind::IdLevel,
                seed: t.seed,
                features: t.features(),
                dim: t.dim,
                levels: t.levels(),
            },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Projection(m) => m.dim,
            Self::IdLevel(t) => t.dim,
        }
    }

    pub fn features(&self) -> usize {
        match self {
            Self::Projection(m) => m.features(),
            Self::IdLevel(t) => t.features(),
        }
    }

    pub fn encode(&self, x: &[f32]) -> Result<BitHypervector> {
        match self {
            Self::Projection(m) => encode_project(m, x),
            Self::IdLevel(t) => encode_id_level(t, x),
        }
    }
}

/// Encoded samples with their labels, in dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSet {
    pub dim: usize,
    pub classes: usize,
    pub hvs: Vec<BitHypervector>,
    pub labels: Vec<usize>,
}

impl EncodedSet {
    pub fn new(dim: usize, classes: usize, hvs: Vec<BitHypervector>, labels: Vec<usize>) -> Result<Self> {
        check_dims(hvs.len(), labels.len())?;
        if let Some(h) = hvs.iter().find(|h| h.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: h.dim(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        Ok(Self {
            dim,
            classes,
            hvs,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.hvs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hvs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitHypervector, usize)> {
        self.hvs.iter().zip(self.labels.iter().copied())
    }

    /// Samples of each class, grouped by class id.
    pub fn by_class(&self) -> Vec<Vec<&BitHypervector>> {
        let mut groups = vec![Vec::new(); self.classes];
        for (h, l) in self.iter() {
            groups[l].push(h);
        }
        groups
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            classes: self.classes,
            hvs: indices.iter().map(|&i| self.hvs[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Encodes every sample in order. Runs on the current rayon pool.
pub fn encode_dataset(encoder: &Encoder, ds: &LabeledDataset) -> Result<EncodedSet> {
    check_dims(encoder.features(), ds.features())?;
    let hvs = match encoder {
        // Dataset values are finite by construction.
        Encoder::Projection(m) => {
            let blocks: Vec<Vec<BitHypervector>> = (0..ds.len())
                .collect::<Vec<_>>()
                .par_chunks(64)
                .map(|idx| m.encode_block(&idx.iter().map(|&i| ds.sample(i)).collect::<Vec<_>>()))
                .collect();
            blocks.into_iter().flatten().collect()
        }
        Encoder::IdLevel(_) => (0..ds.len())
            .into_par_iter()
            .map(|i| encoder.encode(ds.sample(i)).map_err(|e| e.in_sample(i)))
            .collect::<Result<Vec<_>>>()?,
    };
    EncodedSet::new(encoder.dim(), ds.classes(), hvs, ds.labels().to_vec())
}
