//! Deterministic, splittable randomness.
//!
//! Every random draw in the crate flows through an [`RngStream`]: a
//! (seed, stream-id) descriptor that materializes a ChaCha8 generator on
//! demand. ChaCha8 is a pure ARX keystream, so the same descriptor yields
//! the same sequence on every platform; the `rand`/`rand_chacha`/`rand_distr`
//! versions are pinned in the lockfile because distribution sampling is
//! only stable within a version.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Finalizer from splitmix64; a bijection on u64.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Immutable handle for one reproducible random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derives a child stream. For a fixed parent the map `tag -> child`
    /// is injective: the tag enters through multiplication by an odd
    /// constant and `mix64` is a bijection.
    pub fn child(&self, tag: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: mix64(self.stream_id ^ tag.wrapping_add(1).wrapping_mul(GAMMA)),
        }
    }

    /// Splits into `n` child streams with pairwise distinct stream-ids.
    pub fn split(&self, n: usize) -> Vec<RngStream> {
        (0..n as u64).map(|i| self.child(i)).collect()
    }

    /// Materializes the stateful generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draws(s: &RngStream, n: usize) -> Vec<u64> {
        let mut rng = s.rng();
        (0..n).map(|_| rng.gen::<u64>()).collect()
    }

    #[test]
    fn split_is_deterministic() {
        let parent = RngStream::new(7);
        assert_eq!(parent.split(2), parent.split(2));
    }

    #[test]
    fn sibling_streams_differ() {
        let kids = RngStream::new(7).split(2);
        assert_ne!(kids[0].stream_id(), kids[1].stream_id());
        assert_ne!(draws(&kids[0], 100), draws(&kids[1], 100));
    }

    #[test]
    fn single_split_reproducible() {
        let a = RngStream::new(3).split(1);
        let b = RngStream::new(3).split(1);
        assert_eq!(a, b);
        assert_eq!(draws(&a[0], 10), draws(&b[0], 10));
    }

    #[test]
    fn sequences_are_replayable() {
        let s = RngStream::new(42).child(9);
        assert_eq!(draws(&s, 32), draws(&s, 32));
    }

    #[test]
    fn split_prefix_stable() {
        // The first k children do not depend on n.
        let parent = RngStream::new(11);
        let a = parent.split(3);
        let b = parent.split(8);
        assert_eq!(&a[..], &b[..3]);
    }

    #[test]
    fn child_tags_injective() {
        let parent = RngStream::new(5).child(77);
        let ids: std::collections::HashSet<u64> =
            (0..10_000u64).map(|t| parent.child(t).stream_id()).collect();
        assert_eq!(ids.len(), 10_000);
    }
}
