//! Deterministic fan-out from one user-facing seed to per-purpose RNGs.
//!
//! Every randomized procedure takes the single run seed plus a static
//! purpose label (and optionally an index such as a record number), so
//! adding a new randomized step never shifts the streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over the purpose label, for a stable label → u64 mapping.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// splitmix64: cheap, well-distributed mixing of the combined seed.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for `(seed, purpose)`.
pub fn rng_for(seed: u64, purpose: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ fnv1a(purpose.as_bytes())))
}

/// The mixed value that seeds the `(seed, purpose, index)` stream. Artifacts
/// can record this one number and later rebuild their exact RNG with
/// [`rng_from_derived`] — no need to replay the whole batch.
pub fn derived_seed(seed: u64, purpose: &str, index: u64) -> u64 {
    let base = splitmix64(seed ^ fnv1a(purpose.as_bytes()));
    splitmix64(base ^ splitmix64(index.wrapping_add(1)))
}

/// RNG for a recorded [`derived_seed`] value.
pub fn rng_from_derived(derived: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derived)
}

/// RNG for `(seed, purpose, index)`; streams for different indices are
/// independent, so per-record work can run in any order or in parallel.
pub fn rng_for_indexed(seed: u64, purpose: &str, index: u64) -> ChaCha8Rng {
    rng_from_derived(derived_seed(seed, purpose, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn same_inputs_same_stream() {
        let mut a = rng_for(42, "shuffle");
        let mut b = rng_for(42, "shuffle");
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn purposes_are_independent() {
        let mut a = rng_for(42, "shuffle");
        let mut b = rng_for(42, "subset");
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn seeds_are_independent() {
        let mut a = rng_for(1, "shuffle");
        let mut b = rng_for(2, "shuffle");
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn indexed_streams_differ() {
        let mut a = rng_for_indexed(7, "augment", 0);
        let mut b = rng_for_indexed(7, "augment", 1);
        assert_ne!(a.next_u64(), b.next_u64());
        let mut c = rng_for_indexed(7, "augment", 0);
        assert_eq!(rng_for_indexed(7, "augment", 0).next_u64(), c.next_u64());
    }
}
