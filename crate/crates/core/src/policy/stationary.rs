//! Stationary state-feedback maps `f: S → A` and their exact utilities.

use serde::{Deserialize, Serialize};

use crate::env_model::{Layout, MdpClass};
use crate::error::{Error, Result};

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryOptimum {
    /// Action per state.
    pub map: Vec<usize>,
    /// Expected cumulative reward from the instance's initial law.
    pub utility: f64,
}

/// Exact `E^θ[Σ_t r(Y_t, f(S_t))]` started from `start` by forward
/// recursion on the state marginals.
pub fn stationary_utility_from(m: &MdpClass, param: usize, map: &[usize], start: &[f64]) -> f64 {
    let mut dist = start.to_vec();
    let mut next = vec![0.0; m.n_states];
    let mut total = 0.0;
    for t in 0..m.horizon {
        for (s, &d) in dist.iter().enumerate() {
            if d > 0.0 {
                total += d * m.expected_reward(param, s, map[s]);
            }
        }
        if t + 1 == m.horizon {
            break;
        }
        next.iter_mut().for_each(|x| *x = 0.0);
        for (s, &d) in dist.iter().enumerate() {
            if d > 0.0 {
                for (s2, &p) in m.transition[param][s][map[s]].iter().enumerate() {
                    next[s2] += d * p;
                }
            }
        }
        std::mem::swap(&mut dist, &mut next);
    }
    total
}

pub fn stationary_utility(m: &MdpClass, param: usize, map: &[usize]) -> f64 {
    stationary_utility_from(m, param, map, &m.init[param])
}

/// Per-step joint law of `(outcome, state)` under `map`, indexed
/// `[t][y * n_states + s]`.
pub fn stationary_marginals(m: &MdpClass, param: usize, map: &[usize]) -> Vec<Vec<f64>> {
    let mut dist = m.init[param].clone();
    let mut out = Vec::with_capacity(m.horizon);
    for t in 0..m.horizon {
        let mut joint = vec![0.0; m.n_outcomes * m.n_states];
        for (s, &d) in dist.iter().enumerate() {
            for (y, &q) in m.outcome[param][s].iter().enumerate() {
                joint[y * m.n_states + s] += d * q;
            }
        }
        out.push(joint);
        if t + 1 < m.horizon {
            let mut next = vec![0.0; m.n_states];
            for (s, &d) in dist.iter().enumerate() {
                for (s2, &p) in m.transition[param][s][map[s]].iter().enumerate() {
                    next[s2] += d * p;
                }
            }
            dist = next;
        }
    }
    out
}

pub fn stationary_map_count(m: &MdpClass) -> u128 {
    (m.n_actions as u128)
        .checked_pow(m.n_states as u32)
        .unwrap_or(u128::MAX)
}

/// Exhaustive search over all `|A|^|S|` maps.
///
/// Ordering: highest utility from the initial law, then highest utility from
/// a uniform start (so that states the optimum never visits still receive a
/// sensible action), then lexicographically smallest map. Action-folded
/// bandits beyond `cap` use the closed form "always the best arm".
pub fn optimal_stationary_map(m: &MdpClass, param: usize, cap: usize) -> Result<StationaryOptimum> {
    let count = stationary_map_count(m);
    if count > cap as u128 {
        if m.layout == Layout::ActionFolded {
            return Ok(folded_optimum(m, param));
        }
        return Err(Error::CapExceeded {
            what: "stationary maps",
            count,
            cap: cap as u128,
        });
    }
    let uniform = vec![1.0 / m.n_states as f64; m.n_states];
    let mut map = vec![0usize; m.n_states];
    let mut best: Option<(Vec<usize>, f64, f64)> = None;
    loop {
        let primary = stationary_utility(m, param, &map);
        let secondary = stationary_utility_from(m, param, &map, &uniform);
        let better = match &best {
            None => true,
            Some((_, p, s)) => {
                let tol = TIE_TOL * (1.0 + p.abs());
                primary > p + tol || (primary >= p - tol && secondary > s + TIE_TOL * (1.0 + s.abs()))
            }
        };
        if better {
            best = Some((map.clone(), primary, secondary));
        }
        // odometer with state 0 most significant
        let mut i = m.n_states;
        loop {
            if i == 0 {
                let (map, utility, _) = best.expect("at least one map");
                return Ok(StationaryOptimum { map, utility });
            }
            i -= 1;
            map[i] += 1;
            if map[i] < m.n_actions {
                break;
            }
            map[i] = 0;
        }
    }
}

fn folded_optimum(m: &MdpClass, param: usize) -> StationaryOptimum {
    let mut best_arm = 0;
    let mut best_mean = f64::NEG_INFINITY;
    for a in 0..m.n_actions {
        let mean = m.arm_mean(param, a).expect("folded instance");
        if mean > best_mean + TIE_TOL {
            best_mean = mean;
            best_arm = a;
        }
    }
    let map = vec![best_arm; m.n_states];
    let utility = stationary_utility(m, param, &map);
    StationaryOptimum { map, utility }
}

/// Best nonstationary Markov policy value by backward induction, reported
/// next to the stationary optimum.
pub fn nonstationary_optimum(m: &MdpClass, param: usize) -> f64 {
    let mut value = vec![0.0; m.n_states];
    for _ in 0..m.horizon {
        let next: Vec<f64> = (0..m.n_states)
            .map(|s| {
                (0..m.n_actions)
                    .map(|a| {
                        m.expected_reward(param, s, a)
                            + m.transition[param][s][a]
                                .iter()
                                .zip(&value)
                                .map(|(p, v)| p * v)
                                .sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        value = next;
    }
    m.init[param].iter().zip(&value).map(|(p, v)| p * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::{build_contextual_bandit, build_finite_mab, build_linear_bandit};

    #[test]
    fn dominant_arm() {
        let m = build_finite_mab(&[vec![1.0, 0.0], vec![0.0, 1.0]], 4).unwrap();
        let o = optimal_stationary_map(&m, 0, 1000).unwrap();
        assert_eq!(o.map, vec![0]);
        assert_eq!(o.utility, 4.0);
        assert_eq!(optimal_stationary_map(&m, 1, 1000).unwrap().map, vec![1]);
    }

    #[test]
    fn tie_goes_to_lowest_arm() {
        let m = build_finite_mab(&[vec![0.5, 0.5]], 6).unwrap();
        let o = optimal_stationary_map(&m, 0, 1000).unwrap();
        assert_eq!(o.map, vec![0]);
        assert!((o.utility - 3.0).abs() < 1e-12);
        // both maps evaluate to 0.5 T
        assert!((stationary_utility(&m, 0, &[1]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn contextual_swapped_best_arms() {
        let m = build_contextual_bandit(&[0.5, 0.5], &[vec![vec![0.9, 0.2], vec![0.1, 0.8]]], 3).unwrap();
        let o = optimal_stationary_map(&m, 0, 1000).unwrap();
        assert_eq!(o.map, vec![0, 1]);
        let mut values = Vec::new();
        for a0 in 0..2 {
            for a1 in 0..2 {
                values.push(stationary_utility(&m, 0, &[a0, a1]));
            }
        }
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, values[1]);
    }

    #[test]
    fn unreachable_context_still_gets_its_best_arm() {
        let m = build_contextual_bandit(&[1.0, 0.0], &[vec![vec![0.9, 0.2], vec![0.1, 0.8]]], 2).unwrap();
        let o = optimal_stationary_map(&m, 0, 1000).unwrap();
        assert_eq!(o.map, vec![0, 1]);
        assert!((o.utility - 1.8).abs() < 1e-12);
    }

    #[test]
    fn folded_closed_form_matches_enumeration() {
        let m = build_linear_bandit(1, &[vec![-1.0], vec![0.5], vec![1.0]], &[vec![0.3], vec![-0.6]], 3, 3)
            .unwrap();
        for p in 0..2 {
            let exact = optimal_stationary_map(&m, p, 1_000_000).unwrap();
            let closed = folded_optimum(&m, p);
            assert_eq!(exact, closed);
        }
    }

    #[test]
    fn cap_refuses_general_instances() {
        let m = crate::generator::two_state_example();
        assert!(matches!(
            optimal_stationary_map(&m, 0, 3),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn nonstationary_dominates_stationary() {
        let m = crate::generator::two_state_example();
        for p in 0..m.n_params {
            let st = optimal_stationary_map(&m, p, 1000).unwrap().utility;
            assert!(nonstationary_optimum(&m, p) >= st - 1e-12);
        }
    }
}
