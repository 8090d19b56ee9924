//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a stream keyed by a seed
//! and a small tuple of integers (for example an edge `(i, j)` or a replicate
//! index). Streams are independent of evaluation order, so a graph or a Monte
//! Carlo replicate is reproducible no matter how the work is scheduled.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a path of integers.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(seed ^ GOLDEN), |acc, &word| {
        mix64(acc ^ mix64(word.wrapping_add(GOLDEN)))
    })
}

/// A SplitMix64 stream: output `k` is `mix64(key + k * GOLDEN)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn from_path(seed: u64, path: &[u64]) -> Self {
        Self::new(derive_seed(seed, path))
    }

    /// Uniform draw on `[0, 1)` with 53 bits of precision.
    #[inline(always)]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    #[inline(always)]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline(always)]
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

/// Per-row key for edge streams; hoisted out of the inner sampling loop.
#[inline(always)]
pub(crate) fn row_key(seed: u64, row: usize) -> u64 {
    mix64(mix64(seed ^ GOLDEN) ^ mix64((row as u64).wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Stream for edge `{row, col}` (`col < row`) given the key from [`row_key`].
#[inline(always)]
pub(crate) fn edge_stream(row_key: u64, col: usize) -> CounterRng {
    CounterRng::new(row_key.wrapping_add((col as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// Stream for the unordered edge `{i, j}` of a graph sampled with `seed`.
pub fn edge_rng(seed: u64, i: usize, j: usize) -> CounterRng {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    edge_stream(row_key(seed, hi), lo)
}
