//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 keystream addressed by `(seed, stream_id)`. The
//! key comes from the seed and the 64-bit ChaCha stream parameter selects the
//! substream, so deriving a child stream costs one state initialisation and
//! never touches the parent's position. Children are addressed by hashing the
//! parent's id with a caller-chosen key; a worker that knows the key can
//! reconstruct the exact same stream without coordination.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A seeded, single-owner random stream.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream identified by `key`. Depends only on `(seed, stream_id, key)`,
    /// not on how much of `self` has been consumed.
    pub fn substream(&self, key: u64) -> Self {
        Self::new(self.seed, mix(self.stream_id, key))
    }

    /// Child stream reached by applying [`substream`](Self::substream) for each key in turn.
    pub fn derive(&self, keys: &[u64]) -> Self {
        let id = keys.iter().fold(self.stream_id, |id, &k| mix(id, k));
        Self::new(self.seed, id)
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw on `[low, high)`.
    #[inline]
    pub fn uniform_in(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    /// Uniform index in `0..n`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    #[inline]
    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }
}

impl RngCore for RandomStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

// splitmix64 finaliser over the pair; distinct (id, key) pairs collide with
// probability ~2^-64.
fn mix(id: u64, key: u64) -> u64 {
    let mut z = id
        .rotate_left(17)
        .wrapping_add(key.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x632b_e59b_d9b4_e019);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_addresses_give_equal_sequences() {
        let mut a = RandomStream::new(42, 7);
        let mut b = RandomStream::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn substream_ignores_parent_position() {
        let parent = RandomStream::new(3, 0);
        let mut used = parent.clone();
        for _ in 0..17 {
            used.next_u64();
        }
        let mut x = parent.substream(5);
        let mut y = used.substream(5);
        assert_eq!(x.next_u64(), y.next_u64());
        assert_eq!(
            parent.derive(&[1, 2]).stream_id(),
            parent.substream(1).substream(2).stream_id()
        );
    }

    #[test]
    fn distinct_substreams_are_uncorrelated() {
        let root = RandomStream::new(2024, 0);
        let mut a = root.substream(1);
        let mut b = root.substream(2);
        let n = 100_000;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = a.uniform();
            let y = b.uniform();
            sa += x;
            sb += y;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let n = n as f64;
        let cov = sab / n - (sa / n) * (sb / n);
        let corr = cov / ((saa / n - (sa / n).powi(2)).sqrt() * (sbb / n - (sb / n).powi(2)).sqrt());
        assert!(corr.abs() < 0.01, "correlation {corr}");
    }

    #[test]
    fn uniform_range() {
        let mut s = RandomStream::new(0, 0);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            assert!(s.index(3) < 3);
        }
    }
}
