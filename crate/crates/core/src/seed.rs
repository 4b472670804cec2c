//! Seed derivation.
//!
//! Every random stream is keyed by `(master, label, stratum)`. The label is
//! hashed with 64-bit FNV-1a, then the three words are folded through the
//! splitmix64 finalizer. The scheme is fixed so records stay reproducible
//! across builds and platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(label: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derived 64-bit seed for one stream.
pub fn derive(master: u64, label: &str, stratum: u64) -> u64 {
    let a = splitmix(master);
    let b = splitmix(a ^ fnv1a(label));
    splitmix(b ^ stratum.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

/// ChaCha8 stream for `(master, label, stratum)`.
pub fn stream(master: u64, label: &str, stratum: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, label, stratum))
}
