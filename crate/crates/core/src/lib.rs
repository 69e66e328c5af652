//! Multi-centroid binary hyperdimensional classification sized for
//! in-memory-computing arrays.
//!
//! The pipeline: [`encoding`] maps feature vectors to packed binary
//! hypervectors, [`init`] builds a multi-centroid associative memory by
//! per-class clustering plus confusion-driven column allocation,
//! [`training`] refines it with quantization-aware updates, and
//! [`inference`] searches it by popcount similarity. [`cost`] models the
//! tiling of encoder and memory onto fixed-size arrays.

pub mod cost;
pub mod data;
pub mod encoding;
pub mod error;
pub mod format;
pub mod hv;
pub mod inference;
pub mod init;
pub mod rng;
pub mod training;

pub use encoding::{encode_dataset, EncodedSet, Encoder, EncoderKind, EncoderParams};
pub use error::{Error, ErrorKind, Result};
pub use hv::{dot_similarity, BinaryAm, BitHypervector, ClassMap, FloatAm};
pub use inference::{evaluate, predict, ConfusionMatrix, EvalResult};
pub use init::InitConfig;
pub use training::{TrainConfig, TrainReport};
