//! Seeded fixtures shared by the benchmarks.

use memhd_core::rng::{prng, Prng};
use memhd_core::{BinaryAm, BitHypervector, ClassMap};
use rand::Rng;

pub fn rng(seed: u64) -> Prng {
    prng(seed)
}

pub fn random_hv(rng: &mut impl Rng, dim: usize) -> BitHypervector {
    BitHypervector::from_bits((0..dim).map(|_| rng.random::<bool>())).expect("dim >= 1")
}

/// `cols` random columns spread round-robin over `classes`.
pub fn random_am(rng: &mut impl Rng, dim: usize, cols: usize, classes: usize) -> BinaryAm {
    let columns: Vec<_> = (0..cols).map(|_| random_hv(rng, dim)).collect();
    let labels = (0..cols).map(|j| j % classes).collect();
    let map = ClassMap::new(labels, classes).expect("every class owns a column");
    BinaryAm::from_columns(&columns, map).expect("equal dims")
}

/// MNIST-like input: about a fifth of the pixels lit.
pub fn sparse_pixels(rng: &mut impl Rng, features: usize) -> Vec<f32> {
    (0..features)
        .map(|_| {
            if rng.random::<f32>() < 0.2 {
                rng.random::<f32>()
            } else {
                0.0
            }
        })
        .collect()
}
