//! Finite MDP classes indexed by an unknown parameter.
//!
//! An [`MdpClass`] stores every kernel as a dense probability tensor:
//! `transition[θ][s][a]` is a distribution over next states, `outcome[θ][s]`
//! a distribution over outcomes, `init[θ]` the initial-state law and
//! `reward[y][a]` the deterministic reward of outcome `y` under action `a`.
//! The outcome at step `t` depends only on the current state and the
//! parameter; action-dependent outcome laws (bandit feedback) are realized by
//! folding the last action into the state, see [`Layout::ActionFolded`].

mod builders;
mod io;
mod validate;

pub use builders::{
    build_contextual_bandit, build_finite_mab, build_linear_bandit, JOINT_OUTCOME_MAX_ARMS,
};
pub use io::{instance_hash, load_instance, save_instance, FORMAT_VERSION};
pub use validate::{validate, ValidationReport, Violation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROB_TOL: f64 = 1e-9;

/// How the outcome space relates to actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Outcomes are drawn from `outcome[θ][s]` as stored.
    #[default]
    Direct,
    /// Bandit with per-arm outcome laws. State 0 is a start state and state
    /// `1 + a` means "arm `a` was pulled on the previous step"; the outcome of
    /// a pull is observed (and rewarded) one step later, and the last outcome
    /// index is a zero-reward null outcome emitted by the start state. The
    /// stored horizon is the number of pulls plus one.
    ActionFolded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpClass {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_outcomes: usize,
    pub n_params: usize,
    pub horizon: usize,
    pub reward_range: (f64, f64),
    /// `[param][state][action][next_state]`
    pub transition: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[param][state][outcome]`
    pub outcome: Vec<Vec<Vec<f64>>>,
    /// `[outcome][action]`
    pub reward: Vec<Vec<f64>>,
    /// `[param][state]`
    pub init: Vec<Vec<f64>>,
    pub layout: Layout,
}

impl MdpClass {
    /// Validates and returns the instance, or the full violation report.
    pub fn checked(self) -> Result<Self> {
        let report = validate(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::Validation(report))
        }
    }

    #[inline]
    pub fn next_state_dist(&self, param: usize, state: usize, action: usize) -> &[f64] {
        &self.transition[param][state][action]
    }

    #[inline]
    pub fn outcome_dist(&self, param: usize, state: usize) -> &[f64] {
        &self.outcome[param][state]
    }

    #[inline]
    pub fn reward_of(&self, outcome: usize, action: usize) -> f64 {
        self.reward[outcome][action]
    }

    /// `E[r(Y, a) | S = s, Θ = θ]`.
    pub fn expected_reward(&self, param: usize, state: usize, action: usize) -> f64 {
        self.outcome[param][state]
            .iter()
            .zip(&self.reward)
            .map(|(p, row)| p * row[action])
            .sum()
    }

    /// Number of reward-bearing bandit rounds: the horizon, minus the
    /// start step for action-folded instances.
    pub fn pulls(&self) -> usize {
        match self.layout {
            Layout::Direct => self.horizon,
            Layout::ActionFolded => self.horizon - 1,
        }
    }

    /// Single effective state with outcomes independent of the state.
    pub fn is_finite_mab(&self) -> bool {
        match self.layout {
            Layout::Direct => self.n_states == 1,
            Layout::ActionFolded => true,
        }
    }

    /// Mean reward of arm `a` under `θ` for bandit instances.
    pub fn arm_mean(&self, param: usize, action: usize) -> Result<f64> {
        match self.layout {
            Layout::Direct if self.n_states == 1 => Ok(self.expected_reward(param, 0, action)),
            Layout::ActionFolded => Ok(self.outcome[param][1 + action]
                .iter()
                .zip(&self.reward)
                .map(|(p, row)| p * row[0])
                .sum()),
            Layout::Direct => Err(Error::NotApplicable(
                "arm means require a single-state bandit".into(),
            )),
        }
    }

    /// Transitions ignore state and action and carry no information about the
    /// parameter, and the initial law is parameter-free.
    pub fn is_contextual(&self) -> bool {
        if self.layout != Layout::Direct {
            return false;
        }
        let reference = &self.transition[0][0][0];
        let same = |v: &[f64]| v.iter().zip(reference).all(|(a, b)| (a - b).abs() <= 1e-12);
        self.transition
            .iter()
            .all(|per_state| per_state.iter().all(|per_action| per_action.iter().all(|row| same(row))))
            && self
                .init
                .iter()
                .all(|row| row.iter().zip(&self.init[0]).all(|(a, b)| (a - b).abs() <= 1e-12))
    }

    pub fn reward_span(&self) -> f64 {
        self.reward_range.1 - self.reward_range.0
    }
}

/// Prior over the finite parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    weights: Vec<f64>,
}

impl Prior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        check_simplex(&weights).map_err(Error::invalid)?;
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, index: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[index] = 1.0;
        Self { weights }
    }

    /// `λ p + (1 − λ) q`
    pub fn mix(lambda: f64, p: &Prior, q: &Prior) -> Self {
        Self {
            weights: p
                .weights
                .iter()
                .zip(&q.weights)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Ground metric on `outcome × action` pairs, indexed by `y * n_actions + a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    n_outcomes: usize,
    n_actions: usize,
    dist: Vec<Vec<f64>>,
}

impl MetricTable {
    pub fn discrete(n_outcomes: usize, n_actions: usize) -> Self {
        let n = n_outcomes * n_actions;
        let dist = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self {
            n_outcomes,
            n_actions,
            dist,
        }
    }

    /// Checks symmetry, zero diagonal, nonnegativity and the triangle
    /// inequality (within 1e-9) on every triple.
    pub fn new(n_outcomes: usize, n_actions: usize, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = n_outcomes * n_actions;
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!("metric table must be {n}x{n}")));
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(Error::invalid(format!("metric diagonal [{i}][{i}] is nonzero")));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::invalid(format!("metric entry [{i}][{j}] = {d}")));
                }
                if (d - dist[j][i]).abs() > 1e-12 {
                    return Err(Error::invalid(format!("metric is not symmetric at [{i}][{j}]")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] + 1e-9 {
                        return Err(Error::invalid(format!(
                            "triangle inequality fails on ({i}, {j}, {k})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            n_outcomes,
            n_actions,
            dist,
        })
    }

    #[inline]
    pub fn between(&self, y: usize, a: usize, y2: usize, a2: usize) -> f64 {
        self.dist[y * self.n_actions + a][y2 * self.n_actions + a2]
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }
}

pub(crate) fn check_simplex(v: &[f64]) -> std::result::Result<(), String> {
    if v.is_empty() {
        return Err("empty probability vector".into());
    }
    if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0) {
        return Err(format!("entry {i} is {x}"));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(format!("sums to {sum}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_rejects_bad_simplex() {
        assert!(Prior::new(vec![0.5, 0.6]).is_err());
        assert!(Prior::new(vec![-0.1, 1.1]).is_err());
        assert!(Prior::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn metric_rejects_triangle_violation() {
        // pairs (y,a) with one action: d(0,2)=3 > d(0,1)+d(1,2)=2
        let d = vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ];
        assert!(MetricTable::new(3, 1, d).is_err());
        assert!(MetricTable::new(2, 2, MetricTable::discrete(2, 2).dist).is_ok());
    }

    #[test]
    fn metric_rejects_asymmetry() {
        let d = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(MetricTable::new(2, 1, d).is_err());
    }
}
