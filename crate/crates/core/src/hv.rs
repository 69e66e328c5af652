//! Packed binary hypervectors and the associative-memory containers built
//! from them.
//!
//! A bit value of 1 stands for the bipolar coordinate +1 and 0 for -1, so
//! the bipolar dot product of two vectors is `D - 2 * hamming(a, b)`.
//! Coordinates are packed into little-endian ordered `u64` words: coordinate
//! `i` lives in bit `i % 64` of word `i / 64`. Bits past `D` in the last word
//! are always zero.

use crate::error::{Error, Result};

pub(crate) const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(dim: usize) -> usize {
    dim.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(dim: usize) -> u64 {
    match dim % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Bipolar dot product of two equally sized packed word slices.
#[inline]
pub(crate) fn packed_dot(dim: usize, a: &[u64], b: &[u64]) -> i64 {
    let differing: u32 = a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum();
    dim as i64 - 2 * differing as i64
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitHypervector {
    dim: usize,
    words: Vec<u64>,
}

impl BitHypervector {
    /// All coordinates -1.
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension("hypervector dimension"));
        }
        Ok(Self {
            dim,
            words: vec![0; words_for(dim)],
        })
    }

    /// Builds a vector from raw words. Pad bits beyond `dim` are cleared.
    pub fn from_words(dim: usize, mut words: Vec<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension("hypervector dimension"));
        }
        if words.len() != words_for(dim) {
            return Err(Error::DimensionMismatch {
                expected: words_for(dim),
                actual: words.len(),
            });
        }
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(dim);
        }
        Ok(Self { dim, words })
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Result<Self> {
        let mut words = Vec::new();
        let mut dim = 0usize;
        for bit in bits {
            if dim.is_multiple_of(WORD_BITS) {
                words.push(0);
            }
            if bit {
                words[dim / WORD_BITS] |= 1 << (dim % WORD_BITS);
            }
            dim += 1;
        }
        Self::from_words(dim, words)
    }

    /// Sign binarization: coordinate `j` is +1 iff `values[j] > 0`.
    pub fn from_signs(values: &[f64]) -> Result<Self> {
        Self::from_bits(values.iter().map(|&v| v > 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.dim, "coordinate {i} out of range for dim {}", self.dim);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize, value: bool) {
        assert!(i < self.dim, "coordinate {i} out of range for dim {}", self.dim);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    /// Bipolar value (+1 / -1) of coordinate `i`.
    pub fn sign(&self, i: usize) -> i8 {
        if self.bit(i) {
            1
        } else {
            -1
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn complement(&self) -> Self {
        let words = self.words.iter().map(|w| !w).collect();
        Self::from_words(self.dim, words).expect("shape preserved")
    }

    /// Elementwise bipolar product (XNOR of the stored bits).
    pub fn bind(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| !(a ^ b)).collect();
        Self::from_words(self.dim, words)
    }

    pub fn hamming(&self, other: &Self) -> Result<u32> {
        check_dims(self.dim, other.dim)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum())
    }

    pub fn iter_signs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).map(move |i| if self.bit(i) { 1.0 } else { -1.0 })
    }

    /// Expands to a dense ±1 vector.
    pub fn to_bipolar(&self) -> Vec<f64> {
        let mut out = vec![-1.0; self.dim];
        self.add_scaled_to(&mut out, 0.0, 1.0);
        out
    }

    /// `out[j] = out[j] * keep + scale * sign(j)`; the hot path for
    /// accumulating ±1 expansions into real vectors.
    pub(crate) fn add_scaled_to(&self, out: &mut [f64], keep: f64, scale: f64) {
        debug_assert_eq!(out.len(), self.dim);
        for (w, chunk) in self.words.iter().zip(out.chunks_mut(WORD_BITS)) {
            let mut word = *w;
            for slot in chunk.iter_mut() {
                let s = if word & 1 == 1 { scale } else { -scale };
                *slot = *slot * keep + s;
                word >>= 1;
            }
        }
    }

    /// Adds `scale * (±1 expansion)` in place.
    pub fn accumulate_into(&self, out: &mut [f64], scale: f64) -> Result<()> {
        check_dims(self.dim, out.len())?;
        self.add_scaled_to(out, 1.0, scale);
        Ok(())
    }
}

impl std::fmt::Debug for BitHypervector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitHypervector(dim={}, ", self.dim)?;
        for i in 0..self.dim.min(32) {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        if self.dim > 32 {
            f.write_str("..")?;
        }
        f.write_str(")")
    }
}

#[inline]
pub(crate) fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Bipolar dot product `D - 2 * popcount(a ^ b)`, in `[-D, D]`.
pub fn dot_similarity(a: &BitHypervector, b: &BitHypervector) -> Result<i64> {
    check_dims(a.dim, b.dim)?;
    Ok(packed_dot(a.dim, &a.words, &b.words))
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_tiebreak<T: PartialOrd + Copy>(scores: &[T]) -> Result<usize> {
    let (first, rest) = scores.split_first().ok_or(Error::Empty("score sequence"))?;
    let mut best = 0;
    let mut best_score = *first;
    for (i, &s) in rest.iter().enumerate() {
        if s > best_score {
            best = i + 1;
            best_score = s;
        }
    }
    Ok(best)
}

/// Class label of every associative-memory column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMap {
    labels: Vec<usize>,
    classes: usize,
}

impl ClassMap {
    pub fn new(labels: Vec<usize>, classes: usize) -> Result<Self> {
        if classes == 0 {
            return Err(Error::ZeroDimension("class count"));
        }
        let mut owned = vec![false; classes];
        for &label in &labels {
            if label >= classes {
                return Err(Error::LabelOutOfRange { label, classes });
            }
            owned[label] = true;
        }
        if let Some(missing) = owned.iter().position(|&o| !o) {
            return Err(Error::UnknownClass(missing));
        }
        Ok(Self { labels, classes })
    }

    /// One column per class, column `c` labelled `c`.
    pub fn identity(classes: usize) -> Result<Self> {
        Self::new((0..classes).collect(), classes)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, column: usize) -> usize {
        self.labels[column]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn columns_of(&self, class: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == class)
            .map(|(j, _)| j)
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Floating-point associative memory, stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatAm {
    dim: usize,
    values: Vec<f64>,
    class_map: ClassMap,
}

impl FloatAm {
    pub fn zeros(dim: usize, class_map: ClassMap) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension("associative memory dimension"));
        }
        Ok(Self {
            dim,
            values: vec![0.0; dim * class_map.len()],
            class_map,
        })
    }

    /// `columns[j]` becomes column `j`.
    pub fn from_columns(dim: usize, columns: Vec<Vec<f64>>, class_map: ClassMap) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension("associative memory dimension"));
        }
        check_dims(class_map.len(), columns.len())?;
        let mut values = Vec::with_capacity(dim * columns.len());
        for col in &columns {
            check_dims(dim, col.len())?;
            values.extend_from_slice(col);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { dim, values, class_map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cols(&self) -> usize {
        self.class_map.len()
    }

    pub fn class_map(&self) -> &ClassMap {
        &self.class_map
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }

    pub fn columns_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.values.chunks_mut(self.dim)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.dim + row]
    }
}

/// 1-bit associative memory; column words are stored back to back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryAm {
    dim: usize,
    stride: usize,
    words: Vec<u64>,
    class_map: ClassMap,
}

impl BinaryAm {
    pub fn from_columns(columns: &[BitHypervector], class_map: ClassMap) -> Result<Self> {
        check_dims(class_map.len(), columns.len())?;
        let dim = columns.first().ok_or(Error::Empty("associative memory"))?.dim();
        let stride = words_for(dim);
        let mut words = Vec::with_capacity(stride * columns.len());
        for c in columns {
            check_dims(dim, c.dim())?;
            words.extend_from_slice(c.words());
        }
        Ok(Self {
            dim,
            stride,
            words,
            class_map,
        })
    }

    /// Column-major packed words, `cols * ceil(dim / 64)` entries.
    pub fn from_packed(dim: usize, words: Vec<u64>, class_map: ClassMap) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension("associative memory dimension"));
        }
        let stride = words_for(dim);
        check_dims(stride * class_map.len(), words.len())?;
        let columns: Vec<BitHypervector> = words
            .chunks(stride)
            .map(|w| BitHypervector::from_words(dim, w.to_vec()))
            .collect::<Result<_>>()?;
        Self::from_columns(&columns, class_map)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cols(&self) -> usize {
        self.class_map.len()
    }

    pub fn class_map(&self) -> &ClassMap {
        &self.class_map
    }

    pub fn packed_words(&self) -> &[u64] {
        &self.words
    }

    pub fn column_words(&self, j: usize) -> &[u64] {
        &self.words[j * self.stride..(j + 1) * self.stride]
    }

    pub fn column(&self, j: usize) -> BitHypervector {
        BitHypervector {
            dim: self.dim,
            words: self.column_words(j).to_vec(),
        }
    }

    pub fn set_column(&mut self, j: usize, column: &BitHypervector) -> Result<()> {
        check_dims(self.dim, column.dim())?;
        self.words[j * self.stride..(j + 1) * self.stride].copy_from_slice(column.words());
        Ok(())
    }

    /// Similarity of `q` against every column, written into `out`.
    pub fn similarities_into(&self, q: &BitHypervector, out: &mut [i64]) -> Result<()> {
        check_dims(self.dim, q.dim())?;
        check_dims(self.cols(), out.len())?;
        let qw = q.words();
        for (slot, col) in out.iter_mut().zip(self.words.chunks_exact(self.stride)) {
            *slot = packed_dot(self.dim, col, qw);
        }
        Ok(())
    }
}

/// Similarity of `q` against each column of `am`, in column order.
pub fn batch_similarity(am: &BinaryAm, q: &BitHypervector) -> Result<Vec<i64>> {
    let mut out = vec![0; am.cols()];
    am.similarities_into(q, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn random_hv(rng: &mut impl Rng, dim: usize) -> BitHypervector {
        BitHypervector::from_bits((0..dim).map(|_| rng.random::<bool>())).unwrap()
    }

    fn oracle_dot(a: &BitHypervector, b: &BitHypervector) -> i64 {
        (0..a.dim()).map(|i| a.sign(i) as i64 * b.sign(i) as i64).sum()
    }

    #[test]
    fn identical_and_complement() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let a = random_hv(&mut rng, 64);
        assert_eq!(dot_similarity(&a, &a).unwrap(), 64);
        assert_eq!(dot_similarity(&a, &a.complement()).unwrap(), -64);
    }

    #[test]
    fn random_pairs_match_expansion() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        for _ in 0..200 {
            let a = random_hv(&mut rng, 128);
            let b = random_hv(&mut rng, 128);
            assert_eq!(dot_similarity(&a, &b).unwrap(), oracle_dot(&a, &b));
        }
    }

    #[test]
    fn dim_mismatch_is_an_error() {
        let a = BitHypervector::zeros(10).unwrap();
        let b = BitHypervector::zeros(11).unwrap();
        assert!(matches!(dot_similarity(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_dim_rejected() {
        assert!(BitHypervector::zeros(0).is_err());
        assert!(BitHypervector::from_bits(std::iter::empty()).is_err());
    }

    #[test]
    fn batch_examples() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let q = random_hv(&mut rng, 64);
        let single = BinaryAm::from_columns(std::slice::from_ref(&q), ClassMap::identity(1).unwrap()).unwrap();
        assert_eq!(batch_similarity(&single, &q).unwrap(), vec![64]);

        let cols = [q.clone(), q.complement(), q.clone()];
        let map = ClassMap::new(vec![0, 1, 0], 2).unwrap();
        let am = BinaryAm::from_columns(&cols, map).unwrap();
        assert_eq!(batch_similarity(&am, &q).unwrap(), vec![64, -64, 64]);
    }

    #[test]
    fn batch_rejects_wrong_query_dim() {
        let q = BitHypervector::zeros(64).unwrap();
        let am = BinaryAm::from_columns(&[q], ClassMap::identity(1).unwrap()).unwrap();
        let bad = BitHypervector::zeros(65).unwrap();
        assert!(batch_similarity(&am, &bad).is_err());
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_tiebreak(&[3, 7, 7]).unwrap(), 1);
        assert_eq!(argmax_tiebreak(&[5]).unwrap(), 0);
        assert!(argmax_tiebreak::<i64>(&[]).is_err());
    }

    #[test]
    fn argmax_matches_linear_scan() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        for _ in 0..50 {
            let scores: Vec<i64> = (0..100).map(|_| rng.random_range(-5..5)).collect();
            let max = *scores.iter().max().unwrap();
            let expected = scores.iter().position(|&s| s == max).unwrap();
            assert_eq!(argmax_tiebreak(&scores).unwrap(), expected);
        }
    }

    #[test]
    fn class_map_requires_every_class() {
        assert!(matches!(ClassMap::new(vec![0, 0, 2], 3), Err(Error::UnknownClass(1))));
        assert!(ClassMap::new(vec![0, 3], 3).is_err());
        let map = ClassMap::new(vec![1, 0, 1], 2).unwrap();
        assert_eq!(map.columns_of(1).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(map.counts(), vec![1, 2]);
    }

    #[test]
    fn bipolar_expansion_and_accumulate() {
        let hv = BitHypervector::from_bits([true, false, true]).unwrap();
        assert_eq!(hv.to_bipolar(), vec![1.0, -1.0, 1.0]);
        let mut acc = vec![0.5; 3];
        hv.accumulate_into(&mut acc, 2.0).unwrap();
        assert_eq!(acc, vec![2.5, -1.5, 2.5]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn similarity_properties(dim in 1usize..300, seed in any::<u64>()) {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let a = random_hv(&mut rng, dim);
            let b = random_hv(&mut rng, dim);
            let ab = dot_similarity(&a, &b).unwrap();
            prop_assert_eq!(ab, dot_similarity(&b, &a).unwrap());
            prop_assert!(ab.unsigned_abs() as usize <= dim);
            prop_assert_eq!(ab.rem_euclid(2), (dim as i64).rem_euclid(2));
            prop_assert_eq!(dot_similarity(&a, &a).unwrap(), dim as i64);
        }

        #[test]
        fn pad_bits_never_leak(dim in 1usize..200, raw in prop::collection::vec(any::<u64>(), 4), other in prop::collection::vec(any::<u64>(), 4)) {
            let n = words_for(dim);
            let a = BitHypervector::from_words(dim, raw[..n].to_vec()).unwrap();
            let b = BitHypervector::from_words(dim, other[..n].to_vec()).unwrap();
            let expect: i64 = (0..dim).map(|i| a.sign(i) as i64 * b.sign(i) as i64).sum();
            prop_assert_eq!(dot_similarity(&a, &b).unwrap(), expect);
            prop_assert_eq!(a.words().last().unwrap() & !tail_mask(dim), 0);
        }

        #[test]
        fn batch_equals_columnwise(dim in 1usize..200, cols in 1usize..20, seed in any::<u64>()) {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let columns: Vec<_> = (0..cols).map(|_| random_hv(&mut rng, dim)).collect();
            let am = BinaryAm::from_columns(&columns, ClassMap::new(vec![0; cols], 1).unwrap()).unwrap();
            let q = random_hv(&mut rng, dim);
            let got = batch_similarity(&am, &q).unwrap();
            let want: Vec<i64> = columns.iter().map(|c| dot_similarity(c, &q).unwrap()).collect();
            prop_assert_eq!(got, want);
        }
    }
}
