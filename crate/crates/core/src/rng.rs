//! Reproducible random streams.
//!
//! Every trial owns a ChaCha8 generator keyed by a 64-bit seed. ChaCha is a
//! counter-based construction, so a stream is fully determined by
//! `(seed, stream id, word position)` and independent of thread scheduling.
//! Gaussian variates come from a plain Box-Muller transform so the same seed
//! produces the same matrix on every platform that has a correctly rounded
//! `ln`/`sin`/`cos` (glibc and musl both qualify in practice).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream used to draw the spike vector.
pub const SPIKE_STREAM: u64 = 0;
/// Stream used to draw the noise matrix.
pub const NOISE_STREAM: u64 = 1;
/// Stream for anything else a caller needs (reference vectors, start vectors).
pub const AUX_STREAM: u64 = 2;

/// `base_seed XOR hash(cell, trial)`, where `cell` lists the coordinates
/// that identify the data-generating cell.
pub fn trial_seed(base_seed: u64, cell: &[u64], trial: u64) -> u64 {
    let mut h = 0u64;
    for &c in cell {
        h = mix64(h ^ c);
    }
    base_seed ^ mix64(h ^ trial)
}

/// SplitMix64 finalizer; used to hash cell coordinates into seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A seeded generator with uniform and Gaussian helpers.
#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1), 53 random bits.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` (Lemire's rejection method).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.rng.next_u64();
            let m = (x as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Standard normal variate (Box-Muller, both outputs used).
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.gaussian();
        }
    }

    /// Uniformly random `k`-subset of `0..n`, returned sorted.
    pub fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        // partial Fisher-Yates over an index table
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        let mut out = idx[..k].to_vec();
        out.sort_unstable();
        out
    }

    /// Random unit vector of length `p`.
    pub fn unit_vector(&mut self, p: usize) -> Vec<f64> {
        let mut v = vec![0.0; p];
        self.fill_gaussian(&mut v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}
