//! Seeded random instances for property campaigns.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::env_model::{Layout, MdpClass};

/// Inclusive size ranges for generated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub states: (usize, usize),
    pub actions: (usize, usize),
    pub outcomes: (usize, usize),
    pub params: (usize, usize),
    pub horizon: (usize, usize),
    /// Probability that an entry of a sampled distribution is forced to zero
    /// (at least one entry always survives).
    pub sparsity: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            states: (1, 2),
            actions: (1, 3),
            outcomes: (1, 3),
            params: (1, 3),
            horizon: (1, 3),
            sparsity: 0.3,
        }
    }
}

/// Flat-Dirichlet draw via normalized exponentials, with optional zeros.
fn simplex(rng: &mut impl Rng, n: usize, sparsity: f64) -> Vec<f64> {
    let keep = rng.random_range(0..n);
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = Exp1.sample(rng);
            if i != keep && sparsity > 0.0 && rng.random::<f64>() < sparsity {
                0.0
            } else {
                e
            }
        })
        .collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

pub fn random_instance(rng: &mut impl Rng, cfg: &GenConfig) -> MdpClass {
    let pick = |rng: &mut _, (lo, hi): (usize, usize)| -> usize { Rng::random_range(rng, lo..=hi) };
    let n_states = pick(rng, cfg.states);
    let n_actions = pick(rng, cfg.actions);
    let n_outcomes = pick(rng, cfg.outcomes);
    let n_params = pick(rng, cfg.params);
    let horizon = pick(rng, cfg.horizon);
    let sp = cfg.sparsity;
    let transition = (0..n_params)
        .map(|_| {
            (0..n_states)
                .map(|_| (0..n_actions).map(|_| simplex(rng, n_states, sp)).collect())
                .collect()
        })
        .collect();
    let outcome = (0..n_params)
        .map(|_| (0..n_states).map(|_| simplex(rng, n_outcomes, sp)).collect())
        .collect();
    let reward = (0..n_outcomes)
        .map(|_| (0..n_actions).map(|_| rng.random::<f64>()).collect())
        .collect();
    let init = (0..n_params).map(|_| simplex(rng, n_states, sp)).collect();
    MdpClass {
        n_states,
        n_actions,
        n_outcomes,
        n_params,
        horizon,
        reward_range: (0.0, 1.0),
        transition,
        outcome,
        reward,
        init,
        layout: Layout::Direct,
    }
}

/// A fixed two-state instance with parameter-dependent dynamics.
pub fn two_state_example() -> MdpClass {
    MdpClass {
        n_states: 2,
        n_actions: 2,
        n_outcomes: 2,
        n_params: 2,
        horizon: 3,
        reward_range: (0.0, 1.0),
        transition: vec![
            vec![
                vec![vec![0.9, 0.1], vec![0.2, 0.8]],
                vec![vec![0.5, 0.5], vec![0.1, 0.9]],
            ],
            vec![
                vec![vec![0.3, 0.7], vec![0.6, 0.4]],
                vec![vec![0.8, 0.2], vec![0.4, 0.6]],
            ],
        ],
        outcome: vec![
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            vec![vec![0.4, 0.6], vec![0.9, 0.1]],
        ],
        reward: vec![vec![1.0, 0.2], vec![0.0, 0.7]],
        init: vec![vec![0.6, 0.4], vec![0.5, 0.5]],
        layout: Layout::Direct,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let m = random_instance(&mut rng, &GenConfig::default());
            assert!(validate(&m).is_valid(), "{}", validate(&m));
        }
        assert!(validate(&two_state_example()).is_valid());
    }

    #[test]
    fn same_seed_same_instance() {
        let a = random_instance(&mut ChaCha8Rng::seed_from_u64(9), &GenConfig::default());
        let b = random_instance(&mut ChaCha8Rng::seed_from_u64(9), &GenConfig::default());
        assert_eq!(a.to_json(), b.to_json());
    }
}
