//! Canonical bandit instances expressed as MDP classes.

use super::{check_simplex, Layout, MdpClass};
use crate::error::{Error, Result};

/// Largest arm count that uses the joint `{0,1}^|A|` outcome encoding.
pub const JOINT_OUTCOME_MAX_ARMS: usize = 10;

fn check_means(values: impl IntoIterator<Item = f64>) -> Result<()> {
    for m in values {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::invalid(format!("arm mean {m} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Product-Bernoulli law over joint realization vectors; bit `a` of the
/// outcome index is the realized reward of arm `a`.
fn joint_bernoulli(means: &[f64]) -> Vec<f64> {
    let k = means.len();
    (0..1usize << k)
        .map(|y| {
            means
                .iter()
                .enumerate()
                .map(|(a, &m)| if y >> a & 1 == 1 { m } else { 1.0 - m })
                .product()
        })
        .collect()
}

fn joint_reward_table(n_arms: usize) -> Vec<Vec<f64>> {
    (0..1usize << n_arms)
        .map(|y| (0..n_arms).map(|a| (y >> a & 1) as f64).collect())
        .collect()
}

/// Finite multi-armed bandit with Bernoulli arms, `arm_means[param][arm]`.
///
/// Up to [`JOINT_OUTCOME_MAX_ARMS`] arms the instance has a single state and
/// the outcome is the joint realization of all arms. Beyond that the arms are
/// folded into the state ([`Layout::ActionFolded`]) with outcomes
/// `{0, 1, null}`.
pub fn build_finite_mab(arm_means: &[Vec<f64>], horizon: usize) -> Result<MdpClass> {
    let n_params = arm_means.len();
    if n_params == 0 || horizon == 0 {
        return Err(Error::invalid("need at least one parameter and a positive horizon"));
    }
    let n_arms = arm_means[0].len();
    if n_arms == 0 || arm_means.iter().any(|row| row.len() != n_arms) {
        return Err(Error::invalid("ragged or empty arm-mean table"));
    }
    check_means(arm_means.iter().flatten().copied())?;

    if n_arms > JOINT_OUTCOME_MAX_ARMS {
        let per_arm = arm_means
            .iter()
            .map(|row| row.iter().map(|&m| vec![1.0 - m, m]).collect())
            .collect();
        return fold_action_outcomes(per_arm, &[0.0, 1.0], horizon, (0.0, 1.0));
    }

    let n_outcomes = 1 << n_arms;
    MdpClass {
        n_states: 1,
        n_actions: n_arms,
        n_outcomes,
        n_params,
        horizon,
        reward_range: (0.0, 1.0),
        transition: vec![vec![vec![vec![1.0]; n_arms]]; n_params],
        outcome: arm_means.iter().map(|row| vec![joint_bernoulli(row)]).collect(),
        reward: joint_reward_table(n_arms),
        init: vec![vec![1.0]; n_params],
        layout: Layout::Direct,
    }
    .checked()
}

/// Contextual bandit: contexts are drawn i.i.d. from `context_dist`
/// independently of the parameter, the state and the action; arm rewards are
/// Bernoulli with `means[param][context][arm]` under the joint encoding.
pub fn build_contextual_bandit(
    context_dist: &[f64],
    means: &[Vec<Vec<f64>>],
    horizon: usize,
) -> Result<MdpClass> {
    check_simplex(context_dist).map_err(|e| Error::invalid(format!("context distribution {e}")))?;
    let n_states = context_dist.len();
    let n_params = means.len();
    if n_params == 0 || horizon == 0 {
        return Err(Error::invalid("need at least one parameter and a positive horizon"));
    }
    if means.iter().any(|per_ctx| per_ctx.len() != n_states) {
        return Err(Error::invalid("means must be indexed [param][context][arm]"));
    }
    let n_arms = means[0][0].len();
    if n_arms == 0 || means.iter().flatten().any(|row| row.len() != n_arms) {
        return Err(Error::invalid("ragged or empty arm-mean table"));
    }
    if n_arms > JOINT_OUTCOME_MAX_ARMS {
        return Err(Error::invalid(format!(
            "contextual bandits support at most {JOINT_OUTCOME_MAX_ARMS} arms"
        )));
    }
    check_means(means.iter().flatten().flatten().copied())?;

    let row = context_dist.to_vec();
    MdpClass {
        n_states,
        n_actions: n_arms,
        n_outcomes: 1 << n_arms,
        n_params,
        horizon,
        reward_range: (0.0, 1.0),
        transition: vec![vec![vec![row.clone(); n_arms]; n_states]; n_params],
        outcome: means
            .iter()
            .map(|per_ctx| per_ctx.iter().map(|m| joint_bernoulli(m)).collect())
            .collect(),
        reward: joint_reward_table(n_arms),
        init: vec![row; n_params],
        layout: Layout::Direct,
    }
    .checked()
}

/// Equally spaced reward levels spanning `[-1, 1]`.
pub fn linear_levels(n_levels: usize) -> Vec<f64> {
    (0..n_levels)
        .map(|k| -1.0 + 2.0 * k as f64 / (n_levels - 1) as f64)
        .collect()
}

/// Stochastic rounding of `mean` onto the two nearest levels. For two levels
/// this is the two-point law `((1 − m)/2, (1 + m)/2)`.
fn rounded_law(levels: &[f64], mean: f64) -> Vec<f64> {
    let n = levels.len();
    let mut law = vec![0.0; n];
    let step = levels[1] - levels[0];
    let pos = ((mean - levels[0]) / step).clamp(0.0, (n - 1) as f64);
    let lo = (pos.floor() as usize).min(n - 2);
    let hi = lo + 1;
    let upper = ((mean - levels[lo]) / (levels[hi] - levels[lo])).clamp(0.0, 1.0);
    law[lo] = 1.0 - upper;
    law[hi] = upper;
    law
}

/// Linear bandit on finite grids inside the unit ball: the outcome of action
/// `a` under `θ` is a discrete law on `noise_levels` levels in `[-1, 1]`
/// with mean exactly `aᵀθ`. Action-dependent outcomes are folded into the
/// state, so the stored horizon is `horizon + 1`.
pub fn build_linear_bandit(
    dim: usize,
    action_grid: &[Vec<f64>],
    param_grid: &[Vec<f64>],
    noise_levels: usize,
    horizon: usize,
) -> Result<MdpClass> {
    if dim == 0 || noise_levels < 2 || horizon == 0 {
        return Err(Error::invalid("need dim >= 1, noise_levels >= 2, horizon >= 1"));
    }
    if action_grid.is_empty() || param_grid.is_empty() {
        return Err(Error::invalid("empty action or parameter grid"));
    }
    for v in action_grid.iter().chain(param_grid) {
        if v.len() != dim {
            return Err(Error::invalid(format!("grid vector of length {} in dimension {dim}", v.len())));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1.0 + 1e-12 {
            return Err(Error::invalid(format!("grid vector norm {norm} exceeds 1")));
        }
    }
    let levels = linear_levels(noise_levels);
    let mut per_arm = Vec::with_capacity(param_grid.len());
    for theta in param_grid {
        let mut row = Vec::with_capacity(action_grid.len());
        for a in action_grid {
            let mean: f64 = a.iter().zip(theta).map(|(x, y)| x * y).sum();
            if mean.abs() > 1.0 + 1e-12 {
                return Err(Error::invalid(format!("mean {mean} outside [-1, 1]")));
            }
            row.push(rounded_law(&levels, mean.clamp(-1.0, 1.0)));
        }
        per_arm.push(row);
    }
    fold_action_outcomes(per_arm, &levels, horizon, (-1.0, 1.0))
}

/// Builds the action-folded layout from per-arm outcome laws
/// `per_arm[param][arm]` over `levels` (the reward of each level).
fn fold_action_outcomes(
    per_arm: Vec<Vec<Vec<f64>>>,
    levels: &[f64],
    pulls: usize,
    reward_range: (f64, f64),
) -> Result<MdpClass> {
    let n_params = per_arm.len();
    let n_arms = per_arm[0].len();
    let n_states = n_arms + 1;
    let n_levels = levels.len();
    let null = n_levels;
    let n_outcomes = n_levels + 1;

    let unit = |len: usize, at: usize| {
        let mut v = vec![0.0; len];
        v[at] = 1.0;
        v
    };
    let transition_one: Vec<Vec<Vec<f64>>> = (0..n_states)
        .map(|_| (0..n_arms).map(|a| unit(n_states, 1 + a)).collect())
        .collect();
    let outcome = per_arm
        .into_iter()
        .map(|arms| {
            let mut rows = vec![unit(n_outcomes, null)];
            for mut law in arms {
                law.push(0.0);
                rows.push(law);
            }
            rows
        })
        .collect();
    let mut reward: Vec<Vec<f64>> = levels.iter().map(|&l| vec![l; n_arms]).collect();
    reward.push(vec![0.0; n_arms]);

    MdpClass {
        n_states,
        n_actions: n_arms,
        n_outcomes,
        n_params,
        horizon: pulls + 1,
        reward_range,
        transition: vec![transition_one; n_params],
        outcome,
        reward,
        init: vec![unit(n_states, 0); n_params],
        layout: Layout::ActionFolded,
    }
    .checked()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::validate;

    #[test]
    fn deterministic_two_arm() {
        let m = build_finite_mab(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1).unwrap();
        assert_eq!(m.n_outcomes, 4);
        // theta 0 realizes arm0 = 1, arm1 = 0 -> index 0b01
        assert_eq!(m.outcome[0][0], vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.outcome[1][0], vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn mab_arm_means_are_reproduced() {
        let means = vec![vec![0.3, 0.55, 0.9], vec![0.0, 1.0, 0.25]];
        let m = build_finite_mab(&means, 2).unwrap();
        for (p, row) in means.iter().enumerate() {
            for (a, &mu) in row.iter().enumerate() {
                assert!((m.arm_mean(p, a).unwrap() - mu).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn many_arms_switch_to_folded_encoding() {
        let means = vec![(0..12).map(|a| a as f64 / 12.0).collect::<Vec<_>>()];
        let m = build_finite_mab(&means, 3).unwrap();
        assert_eq!(m.layout, Layout::ActionFolded);
        assert_eq!(m.n_states, 13);
        assert_eq!(m.n_outcomes, 3);
        assert_eq!(m.pulls(), 3);
        for a in 0..12 {
            assert!((m.arm_mean(0, a).unwrap() - means[0][a]).abs() < 1e-12);
        }
        assert!(validate(&m).is_valid());
    }

    #[test]
    fn mean_outside_unit_interval_rejected() {
        assert!(build_finite_mab(&[vec![1.2]], 1).is_err());
    }

    #[test]
    fn single_context_reduces_to_mab() {
        let means = vec![vec![0.2, 0.7], vec![0.6, 0.1]];
        let ctx = build_contextual_bandit(
            &[1.0],
            &means.iter().map(|r| vec![r.clone()]).collect::<Vec<_>>(),
            3,
        )
        .unwrap();
        assert_eq!(ctx, build_finite_mab(&means, 3).unwrap());
    }

    #[test]
    fn contextual_rows_are_shared() {
        let m = build_contextual_bandit(
            &[0.3, 0.7],
            &[vec![vec![0.9, 0.1], vec![0.1, 0.9]]],
            2,
        )
        .unwrap();
        assert!(m.is_contextual());
        for s in 0..2 {
            for a in 0..2 {
                assert_eq!(m.transition[0][s][a], vec![0.3, 0.7]);
            }
        }
        assert!(build_contextual_bandit(&[0.3, 0.6], &[vec![vec![0.5], vec![0.5]]], 2).is_err());
    }

    #[test]
    fn linear_extreme_point() {
        let m = build_linear_bandit(1, &[vec![1.0]], &[vec![1.0]], 2, 1).unwrap();
        // state 1 = "arm 0 pulled"; levels (-1, +1) then null
        assert_eq!(m.outcome[0][1], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn linear_symmetric_point() {
        let m = build_linear_bandit(1, &[vec![1.0]], &[vec![0.0]], 2, 1).unwrap();
        assert_eq!(m.outcome[0][1], vec![0.5, 0.5, 0.0]);
        assert!(m.arm_mean(0, 0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn linear_mean_matches_inner_product() {
        let m = build_linear_bandit(2, &[vec![1.0, 0.0]], &[vec![0.6, 0.8]], 2, 1).unwrap();
        assert!((m.arm_mean(0, 0).unwrap() - 0.6).abs() < 1e-12);
        let m5 = build_linear_bandit(2, &[vec![1.0, 0.0], vec![0.0, -1.0]], &[vec![0.6, 0.8]], 5, 1)
            .unwrap();
        assert!((m5.arm_mean(0, 0).unwrap() - 0.6).abs() < 1e-12);
        assert!((m5.arm_mean(0, 1).unwrap() + 0.8).abs() < 1e-12);
    }

    #[test]
    fn linear_rejects_long_vectors() {
        assert!(build_linear_bandit(2, &[vec![1.0, 1.0]], &[vec![0.0, 0.0]], 2, 1).is_err());
        assert!(build_linear_bandit(1, &[vec![1.0]], &[vec![1.0]], 1, 1).is_err());
    }
}
