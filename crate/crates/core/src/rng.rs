//! Seeded randomness.
//!
//! Every random structure in the crate is drawn from xoshiro256++ seeded
//! through SplitMix64 (`seed_from_u64`). Model files record [`PRNG_ID`] so a
//! future change of generator is detectable on load.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Prng = Xoshiro256PlusPlus;

/// Generator identifier stored in model files: 1 = xoshiro256++ / SplitMix64 seeding.
pub const PRNG_ID: u8 = 1;

pub fn prng(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}

/// Independent sub-streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Encoder = 0x656e_636f_6465_7200,
    Init = 0x696e_6974_0000_0000,
    Train = 0x7472_6169_6e00_0000,
    Split = 0x7370_6c69_7400_0000,
}

/// SplitMix64 finalizer applied to `master ^ stream`.
pub fn derive_seed(master: u64, stream: Stream) -> u64 {
    let mut z = (master ^ stream as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_differ() {
        let seeds = [Stream::Encoder, Stream::Init, Stream::Train, Stream::Split].map(|s| derive_seed(42, s));
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
    }

    #[test]
    fn generator_output_is_pinned() {
        // Values from an independent SplitMix64 + xoshiro256++ reference.
        assert_eq!(prng(0).next_u64(), 0x5317_5d61_490b_23df);
        assert_eq!(derive_seed(0, Stream::Encoder), 0x0e05_a9d2_7ffd_526e);
    }
}
