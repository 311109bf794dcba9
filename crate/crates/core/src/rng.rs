//! Named random streams derived from a master seed.
//!
//! Each subsystem draws from its own stream so that adding a draw in one
//! place never shifts the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamLabel {
    Mobility,
    Traffic,
    Adversary,
    Scenario,
}

impl StreamLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamLabel::Mobility => "mobility",
            StreamLabel::Traffic => "traffic",
            StreamLabel::Adversary => "adversary",
            StreamLabel::Scenario => "scenario",
        }
    }
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// FNV-1a, stable across platforms and compiler versions.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed of the `index`-th run of a sweep rooted at `master_seed`.
pub fn derive_run_seed(master_seed: u64, index: u64) -> u64 {
    mix(master_seed ^ mix(index.wrapping_add(1)))
}

/// Creates the generator for `(seed, label)`.
pub fn stream(seed: u64, label: StreamLabel) -> ChaCha8Rng {
    let key = mix(seed ^ fnv1a(label.as_str().as_bytes()));
    ChaCha8Rng::seed_from_u64(key)
}
