//! Seeded, parallel Monte Carlo with deterministic reduction.
//!
//! Rollout `i` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so
//! results do not depend on the thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub fn rollout_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` for indices `0..n` in parallel and returns the results in index
/// order.
pub fn parallel_rollouts<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(&mut rollout_rng(seed, i as u64), i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Sample mean and standard error of the mean, summed in index order.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                samples: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            samples: n,
        }
    }
}

/// Index drawn from the categorical law `weights` (which need not be
/// normalized).
pub fn sample_index(rng: &mut impl rand::Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return i;
            }
            u -= w;
            last = i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rollouts_are_independent_of_thread_count() {
        let f = |rng: &mut ChaCha8Rng, i: usize| rand::Rng::random::<f64>(rng) + i as f64;
        let a = parallel_rollouts(200, 7, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| parallel_rollouts(200, 7, f));
        assert_eq!(a, b);
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = McEstimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn sampling_skips_zero_weights() {
        let mut rng = rollout_rng(1, 0);
        for _ in 0..1000 {
            assert_eq!(sample_index(&mut rng, &[0.0, 2.0, 0.0]), 1);
        }
    }
}
