//! Deterministic hierarchical random streams.
//!
//! A [`RandomStream`] is identified by a master seed and a path of integer
//! labels such as `[method, step, client]`. The path is hashed into a 64-bit
//! key and draws are `mix(key + (i + 1)·γ)` for the `i`-th draw, so any stream
//! can be rebuilt from its identity alone. Work may therefore be spread over
//! threads in any order without changing a single bit of output.

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
    path: Vec<u64>,
    key: u64,
    counter: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            path: Vec::new(),
            key: mix64(seed ^ 0x243F_6A88_85A3_08D3),
            counter: 0,
        }
    }

    pub fn from_path(seed: u64, path: &[u64]) -> Self {
        Self::new(seed).fork_path(path)
    }

    /// Child stream whose path is `self.path ++ [label]`.
    ///
    /// The child depends only on the parent's identity, not on how many
    /// values the parent has already produced.
    pub fn fork(&self, label: u64) -> Self {
        let mut path = self.path.clone();
        path.push(label);
        Self {
            seed: self.seed,
            path,
            key: mix64(self.key ^ mix64(label.wrapping_add(0x1319_8A2E_0370_7344))),
            counter: 0,
        }
    }

    pub fn fork_path(&self, labels: &[u64]) -> Self {
        labels.iter().fold(self.clone(), |s, &l| s.fork(l))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` (Lemire's widening multiply, rejection-free
    /// bias below 2⁻⁶⁴·n).
    pub fn next_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_index needs a non-empty range");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            // still consume a draw so the stream position is p-independent
            self.next_u64();
            return true;
        }
        self.next_f64() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(s: &mut RandomStream, n: usize) -> Vec<u64> {
        (0..n).map(|_| s.next_u64()).collect()
    }

    #[test]
    fn fork_is_path_associative() {
        let s = RandomStream::new(42);
        let a = s.fork(1).fork(2);
        let b = s.fork_path(&[1, 2]);
        assert_eq!(a, b);
        assert_eq!(a.path(), &[1, 2]);
        assert_eq!(draws(&mut a.clone(), 8), draws(&mut b.clone(), 8));
    }

    #[test]
    fn distinct_labels_give_distinct_streams() {
        let s = RandomStream::new(2024);
        let mut a = s.fork(1);
        let mut b = s.fork(2);
        // pinned from a single run of this generator
        assert_eq!(a.next_u64(), 0x3eb291b1ca2154d9);
        assert_eq!(b.next_u64(), 0xf25fe47c0451b84e);
    }

    #[test]
    fn replay_is_bit_identical() {
        let mut a = RandomStream::from_path(7, &[3, 1, 4]);
        let mut b = RandomStream::from_path(7, &[3, 1, 4]);
        assert_eq!(draws(&mut a, 100), draws(&mut b, 100));
    }

    #[test]
    fn fork_ignores_parent_position() {
        let s = RandomStream::new(9);
        let mut advanced = s.clone();
        draws(&mut advanced, 17);
        assert_eq!(draws(&mut s.fork(5), 4), draws(&mut advanced.fork(5), 4));
    }

    #[test]
    fn unit_interval_and_index_ranges() {
        let mut s = RandomStream::new(1);
        for _ in 0..10_000 {
            let u = s.next_f64();
            assert!((0.0..1.0).contains(&u));
            assert!(s.next_index(5) < 5);
        }
    }
}
