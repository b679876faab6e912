//! Seeded, splittable random source.
//!
//! Every stochastic step in the pipeline draws from a [`RngHandle`] derived
//! from the single run seed, so identical (config, seed) pairs replay the
//! exact same draw sequence on every platform. ChaCha8 is a counter-based
//! stream cipher generator: cheap to seed, cheap to split into independent
//! streams, and stable across architectures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub struct RngHandle {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64) -> RngHandle {
        RngHandle {
            seed,
            stream: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent generator for the same seed. Streams are global to the
    /// seed: `split(s)` yields the same draws no matter which handle it is
    /// called on, which is what lets separately invoked pipeline stages
    /// reproduce the monolithic run. Callers pick distinct stream ids.
    pub fn split(&self, stream: u64) -> RngHandle {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        RngHandle {
            seed: self.seed,
            stream,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform01(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform draw from `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform01()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    /// Box-Muller pair: two uniforms in, two independent standard normals out.
    fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform01(); // (0, 1], keeps the log finite
        let u2 = self.uniform01();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (r * theta.cos(), r * theta.sin())
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.normal_pair().0
    }

    /// Matrix of i.i.d. standard normal draws, filled row-major in pairs.
    pub fn standard_normal_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        let n = rows * cols;
        let mut data = Vec::with_capacity(n);
        while data.len() + 1 < n {
            let (a, b) = self.normal_pair();
            data.push(a);
            data.push(b);
        }
        if data.len() < n {
            data.push(self.normal_pair().0);
        }
        Matrix::new(rows, cols, data).expect("normal draws are finite")
    }

    /// Fisher-Yates permutation of `0..n`.
    pub fn shuffled_indices(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        idx
    }

    /// `count` indices drawn uniformly from `0..n` with replacement.
    pub fn sample_with_replacement(&mut self, n: usize, count: usize) -> Vec<usize> {
        (0..count).map(|_| self.rng.gen_range(0..n)).collect()
    }

    /// Random disjoint partition of `0..n` with `|first| = round(fraction * n)`.
    /// Both sides are returned in ascending index order.
    pub fn uniform_split(&mut self, n: usize, fraction: f64) -> Result<(Vec<usize>, Vec<usize>)> {
        if n < 2 {
            return Err(Error::TooFewSamples {
                context: "uniform_split".into(),
                needed: 2,
                got: n,
            });
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Config(format!(
                "split fraction must be strictly between 0 and 1, got {fraction}"
            )));
        }
        let k = (fraction * n as f64).round() as usize;
        if k == 0 || k == n {
            return Err(Error::Config(format!(
                "split fraction {fraction} leaves one side of a {n}-sample split empty"
            )));
        }
        let perm = self.shuffled_indices(n);
        let mut first: Vec<usize> = perm[..k].to_vec();
        let mut second: Vec<usize> = perm[k..].to_vec();
        first.sort_unstable();
        second.sort_unstable();
        Ok((first, second))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_replay_identical_draws() {
        let mut a = RngHandle::new(42);
        let mut b = RngHandle::new(42);
        for _ in 0..100 {
            assert_eq!(a.uniform01().to_bits(), b.uniform01().to_bits());
        }
        let ma = RngHandle::new(7).standard_normal_matrix(5, 3);
        let mb = RngHandle::new(7).standard_normal_matrix(5, 3);
        assert_eq!(ma, mb);
    }

    #[test]
    fn splits_are_stream_addressed_not_state_addressed() {
        let root = RngHandle::new(9);
        let mut consumed = RngHandle::new(9);
        for _ in 0..17 {
            consumed.uniform01();
        }
        let mut a = root.split(3);
        let mut b = consumed.split(3);
        assert_eq!(a.uniform01().to_bits(), b.uniform01().to_bits());

        let mut c = root.split(4);
        assert_ne!(a.uniform01().to_bits(), c.uniform01().to_bits());
    }

    #[test]
    fn uniform_split_is_an_exact_partition() {
        let mut rng = RngHandle::new(1);
        let (train, test) = rng.uniform_split(10, 0.8).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(train.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn uniform_split_rejects_degenerate_inputs() {
        let mut rng = RngHandle::new(1);
        assert!(rng.uniform_split(1, 0.8).is_err());
        assert!(rng.uniform_split(10, 0.0).is_err());
        assert!(rng.uniform_split(10, 1.0).is_err());
        assert!(rng.uniform_split(3, 0.99).is_err()); // round(2.97) = 3 = n
    }

    #[test]
    fn uniform_split_is_deterministic_per_seed() {
        let a = RngHandle::new(5).uniform_split(100, 0.8).unwrap();
        let b = RngHandle::new(5).uniform_split(100, 0.8).unwrap();
        assert_eq!(a, b);
        let c = RngHandle::new(6).uniform_split(100, 0.8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn standard_normal_matches_first_two_moments() {
        let mut rng = RngHandle::new(2024);
        let n = 100_000;
        let m = rng.standard_normal_matrix(n, 1);
        let mean = m.data().iter().sum::<f64>() / n as f64;
        let var = m.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = RngHandle::new(3);
        let p = rng.shuffled_indices(50);
        let mut sorted = p.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }
}
