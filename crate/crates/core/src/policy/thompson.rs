//! Thompson sampling: per-step posterior sampling followed by the sampled
//! parameter's optimal stationary action.
//!
//! [`simulate_ts`] draws one trajectory. [`ts_expected`] builds the exact
//! tree of Thompson-sampling histories, weighting every branch by the
//! probability that the algorithm takes it.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env_model::Prior;
use crate::error::{Error, Result};
use crate::mc::{parallel_rollouts, sample_index, McEstimate};
use crate::model::ExactModel;

/// Beliefs closer than this in every coordinate share a tree node.
pub const BELIEF_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsStep {
    pub t: usize,
    /// Posterior given the history before the current state is seen.
    pub history_belief: Vec<f64>,
    /// Posterior after conditioning on the current state; `sampled` is drawn
    /// from it.
    pub belief: Vec<f64>,
    pub sampled: usize,
    pub state: usize,
    pub action: usize,
    pub outcome: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub seed: Option<u64>,
    pub true_param: usize,
    pub steps: Vec<TsStep>,
}

impl TrajectoryLog {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut out = out;
        match self.seed {
            Some(seed) => writeln!(out, "# seed={seed} true_param={}", self.true_param)?,
            None => writeln!(out, "# true_param={}", self.true_param)?,
        }
        let n_params = self.steps.first().map_or(0, |s| s.belief.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "t".to_string(),
            "state".into(),
            "action".into(),
            "outcome".into(),
            "reward".into(),
            "sampled_param".into(),
        ];
        header.extend((0..n_params).map(|i| format!("posterior_{i}")));
        w.write_record(&header).map_err(csv_err)?;
        for s in &self.steps {
            let mut row = vec![
                s.t.to_string(),
                s.state.to_string(),
                s.action.to_string(),
                s.outcome.to_string(),
                s.reward.to_string(),
                s.sampled.to_string(),
            ];
            row.extend(s.belief.iter().map(|b| b.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Multiplies `post` by `lik` and renormalizes; fails when the observation
/// is impossible under every parameter still in the support.
fn condition(post: &mut [f64], lik: impl Fn(usize) -> f64, step: usize) -> Result<()> {
    let mut total = 0.0;
    for (p, w) in post.iter_mut().enumerate() {
        *w *= lik(p);
        total += *w;
    }
    if total <= 0.0 {
        return Err(Error::ZeroLikelihood { step });
    }
    post.iter_mut().for_each(|w| *w /= total);
    Ok(())
}

/// One Thompson-sampling trajectory against the environment `true_param`.
pub fn simulate_ts(
    model: &ExactModel<'_>,
    prior: &Prior,
    true_param: usize,
    rng: &mut impl Rng,
) -> Result<TrajectoryLog> {
    let m = model.instance();
    check_prior(model, prior)?;
    if true_param >= m.n_params {
        return Err(Error::invalid(format!("true parameter {true_param} out of range")));
    }
    let mut post = prior.weights().to_vec();
    let mut state = sample_index(rng, &m.init[true_param]);
    let mut last: Option<(usize, usize)> = None;
    let mut steps = Vec::with_capacity(m.horizon);
    for t in 0..m.horizon {
        let history_belief = post.clone();
        match last {
            None => condition(&mut post, |p| m.init[p][state], t)?,
            Some((s, a)) => condition(&mut post, |p| m.transition[p][s][a][state], t)?,
        }
        let belief = post.clone();
        let sampled = sample_index(rng, &belief);
        let action = model.optimum(sampled).map[state];
        let outcome = sample_index(rng, &m.outcome[true_param][state]);
        let reward = m.reward[outcome][action];
        condition(&mut post, |p| m.outcome[p][state][outcome], t)?;
        steps.push(TsStep {
            t,
            history_belief,
            belief,
            sampled,
            state,
            action,
            outcome,
            reward,
        });
        if t + 1 < m.horizon {
            last = Some((state, action));
            state = sample_index(rng, &m.transition[true_param][state][action]);
        }
    }
    Ok(TrajectoryLog {
        seed: None,
        true_param,
        steps,
    })
}

fn check_prior(model: &ExactModel<'_>, prior: &Prior) -> Result<()> {
    if prior.len() != model.n_params() {
        return Err(Error::invalid(format!(
            "prior has {} entries, instance has {} parameters",
            prior.len(),
            model.n_params()
        )));
    }
    Ok(())
}

/// Thompson-sampling action law at a state given a belief.
pub fn ts_action_law(model: &ExactModel<'_>, belief: &[f64], state: usize) -> Vec<f64> {
    let mut q = vec![0.0; model.instance().n_actions];
    for (p, &b) in belief.iter().enumerate() {
        if b > 0.0 {
            q[model.optimum(p).map[state]] += b;
        }
    }
    q
}

/// A Thompson-sampling history at step `t`, before `S_t` is observed.
#[derive(Debug, Clone)]
pub struct TsNode {
    /// Previous state and action; `None` at the first step.
    pub last: Option<(usize, usize)>,
    /// `P(history | θ)` including the algorithm's own action probabilities.
    pub path_prob: Vec<f64>,
}

impl TsNode {
    /// Posterior given the history; `None` if no prior mass remains.
    pub fn posterior(&self, prior: &Prior) -> Option<Vec<f64>> {
        let w: Vec<f64> = prior
            .weights()
            .iter()
            .zip(&self.path_prob)
            .map(|(a, b)| a * b)
            .collect();
        let total: f64 = w.iter().sum();
        (total > 0.0).then(|| w.into_iter().map(|x| x / total).collect())
    }
}

#[derive(Debug, Clone)]
pub struct TsTree {
    /// `layers[t]` holds the distinct histories of length `t`.
    pub layers: Vec<Vec<TsNode>>,
    /// Exact TS utility per parameter; `None` when TS is undefined on
    /// some positive-probability history (parameter outside the prior's
    /// support producing an observation the prior rules out).
    pub utility: Vec<Option<f64>>,
    /// `[θ][t][a]`: probability that TS plays `a` at step `t` under `θ`.
    pub action_marginals: Vec<Vec<Vec<f64>>>,
}

impl TsTree {
    pub fn node_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// `E_Θ[U*(Θ) − U_TS(Θ)]`.
    pub fn bayes_regret(&self, model: &ExactModel<'_>, prior: &Prior) -> f64 {
        prior
            .weights()
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(p, &w)| w * (model.optimal_utility(p) - self.utility[p].expect("defined on support")))
            .sum()
    }

    /// `U*(θ) − U_TS(θ)` for every parameter where TS is defined.
    pub fn regret(&self, model: &ExactModel<'_>, param: usize) -> Option<f64> {
        self.utility[param].map(|u| model.optimal_utility(param) - u)
    }
}

fn belief_key(belief: &[f64]) -> Vec<i64> {
    belief
        .iter()
        .map(|b| (b / BELIEF_MERGE_TOL).round() as i64)
        .collect()
}

/// Exact recursion over Thompson-sampling histories.
pub fn ts_expected(model: &ExactModel<'_>, prior: &Prior) -> Result<TsTree> {
    check_prior(model, prior)?;
    let m = model.instance();
    let n_params = m.n_params;
    let w = prior.weights();
    let cap = model.caps().tree_nodes;
    let mut utility = vec![0.0; n_params];
    let mut undefined = vec![false; n_params];
    let mut marginals = vec![vec![vec![0.0; m.n_actions]; m.horizon]; n_params];
    let mut layers = vec![vec![TsNode {
        last: None,
        path_prob: vec![1.0; n_params],
    }]];
    let mut total_nodes = 1usize;
    for t in 0..m.horizon {
        let mut next: Vec<TsNode> = Vec::new();
        let mut index: HashMap<(usize, usize, Vec<i64>), usize> = HashMap::new();
        for node in &layers[t] {
            for s in 0..m.n_states {
                let ps: Vec<f64> = (0..n_params)
                    .map(|p| {
                        node.path_prob[p]
                            * match node.last {
                                None => m.init[p][s],
                                Some((s0, a0)) => m.transition[p][s0][a0][s],
                            }
                    })
                    .collect();
                if ps.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let mass: f64 = (0..n_params).map(|p| w[p] * ps[p]).sum();
                if mass <= 0.0 {
                    for p in 0..n_params {
                        if ps[p] > 0.0 {
                            undefined[p] = true;
                        }
                    }
                    continue;
                }
                let belief: Vec<f64> = (0..n_params).map(|p| w[p] * ps[p] / mass).collect();
                let q = ts_action_law(model, &belief, s);
                for (a, &qa) in q.iter().enumerate() {
                    if qa == 0.0 {
                        continue;
                    }
                    for p in 0..n_params {
                        utility[p] += ps[p] * qa * model.expected_reward(p, s, a);
                        marginals[p][t][a] += ps[p] * qa;
                    }
                    if t + 1 == m.horizon {
                        continue;
                    }
                    for y in 0..m.n_outcomes {
                        let child: Vec<f64> = (0..n_params)
                            .map(|p| ps[p] * qa * m.outcome[p][s][y])
                            .collect();
                        if child.iter().all(|&x| x == 0.0) {
                            continue;
                        }
                        let cm: f64 = (0..n_params).map(|p| w[p] * child[p]).sum();
                        let key_belief: Vec<f64> = if cm > 0.0 {
                            (0..n_params).map(|p| w[p] * child[p] / cm).collect()
                        } else {
                            vec![f64::NAN; n_params]
                        };
                        let key = (s, a, belief_key(&key_belief));
                        match index.get(&key) {
                            Some(&i) => {
                                for p in 0..n_params {
                                    next[i].path_prob[p] += child[p];
                                }
                            }
                            None => {
                                index.insert(key, next.len());
                                next.push(TsNode {
                                    last: Some((s, a)),
                                    path_prob: child,
                                });
                                total_nodes += 1;
                                if total_nodes > cap {
                                    return Err(Error::CapExceeded {
                                        what: "thompson-sampling tree nodes",
                                        count: total_nodes as u128,
                                        cap: cap as u128,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        if t + 1 < m.horizon {
            layers.push(next);
        }
    }
    Ok(TsTree {
        layers,
        utility: utility
            .into_iter()
            .zip(&undefined)
            .map(|(u, &bad)| (!bad).then_some(u))
            .collect(),
        action_marginals: marginals,
    })
}

/// Monte Carlo Thompson-sampling regret. With `true_param = None` the
/// environment parameter is drawn from the prior for every rollout and the
/// estimate targets the Bayesian regret. Each rollout scores the expected
/// one-step reward of the visited state-action pairs rather than the realized
/// reward, which has the same mean and lower variance.
pub fn ts_monte_carlo(
    model: &ExactModel<'_>,
    prior: &Prior,
    true_param: Option<usize>,
    rollouts: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_prior(model, prior)?;
    let samples: Vec<Result<f64>> = parallel_rollouts(rollouts, seed, |rng, _| {
        let theta = match true_param {
            Some(p) => p,
            None => sample_index(rng, prior.weights()),
        };
        let log = simulate_ts(model, prior, theta, rng)?;
        let earned: f64 = log
            .steps
            .iter()
            .map(|st| model.expected_reward(theta, st.state, st.action))
            .sum();
        Ok(model.optimal_utility(theta) - earned)
    });
    let samples = samples.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(McEstimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::{build_contextual_bandit, build_finite_mab};
    use crate::mc::rollout_rng;

    #[test]
    fn point_prior_plays_the_optimum() {
        let inst = build_finite_mab(&[vec![0.2, 0.7], vec![0.9, 0.1]], 5).unwrap();
        let m = ExactModel::new(&inst).unwrap();
        let mut rng = rollout_rng(3, 0);
        let log = simulate_ts(&m, &Prior::point(2, 1), 1, &mut rng).unwrap();
        assert_eq!(log.steps.len(), 5);
        assert!(log.steps.iter().all(|s| s.action == 0 && s.belief == vec![0.0, 1.0]));
        let tree = ts_expected(&m, &Prior::point(2, 1)).unwrap();
        assert!(tree.regret(&m, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn deterministic_two_arm_exact_regret() {
        let inst = build_finite_mab(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let m = ExactModel::new(&inst).unwrap();
        let prior = Prior::uniform(2);
        let tree = ts_expected(&m, &prior).unwrap();
        assert!((tree.bayes_regret(&m, &prior) - 0.5).abs() < 1e-12);
        assert_eq!(tree.action_marginals[0][0], vec![0.5, 0.5]);
        assert_eq!(tree.action_marginals[0][1], vec![1.0, 0.0]);
    }

    #[test]
    fn disjoint_support_is_a_zero_likelihood_error() {
        let inst = build_finite_mab(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let m = ExactModel::new(&inst).unwrap();
        let mut rng = rollout_rng(0, 0);
        let err = simulate_ts(&m, &Prior::point(2, 0), 1, &mut rng).unwrap_err();
        assert!(matches!(err, Error::ZeroLikelihood { step: 0 }));
        let tree = ts_expected(&m, &Prior::point(2, 0)).unwrap();
        assert!(tree.utility[1].is_none());
        assert!(tree.utility[0].is_some());
    }

    #[test]
    fn rewards_match_the_table() {
        let inst = build_contextual_bandit(&[0.3, 0.7], &[vec![vec![0.9, 0.2], vec![0.1, 0.8]], vec![vec![0.2, 0.6], vec![0.5, 0.4]]], 4)
            .unwrap();
        let m = ExactModel::new(&inst).unwrap();
        for i in 0..50 {
            let mut rng = rollout_rng(11, i);
            let log = simulate_ts(&m, &Prior::uniform(2), (i % 2) as usize, &mut rng).unwrap();
            for s in &log.steps {
                assert_eq!(s.reward, inst.reward[s.outcome][s.action]);
                assert!((s.belief.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn monte_carlo_matches_exact_action_marginals() {
        let inst = build_finite_mab(&[vec![0.3, 0.6], vec![0.7, 0.4]], 3).unwrap();
        let m = ExactModel::new(&inst).unwrap();
        let prior = Prior::new(vec![0.4, 0.6]).unwrap();
        let tree = ts_expected(&m, &prior).unwrap();
        let n = 20_000;
        let logs = parallel_rollouts(n, 99, |rng, _| simulate_ts(&m, &prior, 0, rng).unwrap());
        for t in 0..3 {
            let freq = logs.iter().filter(|l| l.steps[t].action == 1).count() as f64 / n as f64;
            let p = tree.action_marginals[0][t][1];
            let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-12);
            assert!((freq - p).abs() <= 3.0 * se + 1e-12, "t={t} freq={freq} exact={p}");
        }
        let mc = ts_monte_carlo(&m, &prior, None, n, 5).unwrap();
        let exact = tree.bayes_regret(&m, &prior);
        assert!((mc.mean - exact).abs() <= 3.0 * mc.std_error, "{mc:?} vs {exact}");
    }

    #[test]
    fn csv_has_seed_header() {
        let inst = build_finite_mab(&[vec![0.5, 0.5]], 2).unwrap();
        let m = ExactModel::new(&inst).unwrap();
        let mut log = simulate_ts(&m, &Prior::uniform(1), 0, &mut rollout_rng(1, 0)).unwrap();
        log.seed = Some(1);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# seed=1 true_param=0"));
        assert_eq!(lines.next(), Some("t,state,action,outcome,reward,sampled_param,posterior_0"));
        assert_eq!(text.lines().count(), 4);
    }
}
