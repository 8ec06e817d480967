//! Utility, regret, Bayesian regret and minimum Bayesian regret, evaluated
//! exactly on the history tree.

use serde::{Deserialize, Serialize};

use crate::env_model::Prior;
use crate::error::{Error, Result};
use crate::model::ExactModel;
use crate::policy::stationary::stationary_map_count;
use crate::policy::{
    bayes_optimal_policy, enumerate_policies, policy_count, HistoryPolicy, HistoryTree, PolicyRef,
};

/// Agreement required between the two forms of the Bayesian regret.
pub const CROSS_CHECK_TOL: f64 = 1e-9;

/// Largest stationary-map count brute-forced on the history tree for the
/// decomposed Bayesian-regret form.
const DECOMPOSED_MAP_LIMIT: u128 = 4096;

/// Largest catalog enumerated to cross-check the Bayes-optimal policy.
const MBR_CROSS_CHECK_LIMIT: u128 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretValue {
    pub value: f64,
    pub optimal_utility: f64,
    pub achieved_utility: f64,
}

fn check_policy(tree: &HistoryTree, policy: &HistoryPolicy) -> Result<()> {
    if policy.len() != tree.len() {
        return Err(Error::invalid(format!(
            "policy covers {} history nodes but the instance tree has {}",
            policy.len(),
            tree.len()
        )));
    }
    Ok(())
}

/// `U(π, θ)` for every parameter in one pass over the policy's subtree.
pub fn utility_vector(model: &ExactModel<'_>, policy: &HistoryPolicy) -> Result<Vec<f64>> {
    let tree = model.tree()?;
    check_policy(tree, policy)?;
    let mut u = vec![0.0; model.n_params()];
    for (node, n) in tree.nodes.iter().enumerate() {
        if let Some(a) = policy.action(node) {
            for (p, acc) in u.iter_mut().enumerate() {
                *acc += n.likelihood[p] * model.expected_reward(p, n.state, a);
            }
        }
    }
    Ok(u)
}

/// `U(π, θ)` for a pure or mixed policy.
pub fn utility<'p>(model: &ExactModel<'_>, policy: impl Into<PolicyRef<'p>>, param: usize) -> Result<f64> {
    check_param(model, param)?;
    match policy.into() {
        PolicyRef::Pure(p) => Ok(utility_vector(model, p)?[param]),
        PolicyRef::Mixed(mix) => {
            let mut total = 0.0;
            for (p, &w) in mix.support.iter().zip(&mix.weights) {
                total += w * utility_vector(model, p)?[param];
            }
            Ok(total)
        }
    }
}

fn check_param(model: &ExactModel<'_>, param: usize) -> Result<()> {
    if param >= model.n_params() {
        return Err(Error::invalid(format!("parameter {param} out of range")));
    }
    Ok(())
}

/// `U*(θ)`: utility of the optimal stationary map.
pub fn optimal_utility(model: &ExactModel<'_>, param: usize) -> Result<f64> {
    check_param(model, param)?;
    Ok(model.optimal_utility(param))
}

pub fn regret<'p>(model: &ExactModel<'_>, policy: impl Into<PolicyRef<'p>>, param: usize) -> Result<RegretValue> {
    let achieved_utility = utility(model, policy, param)?;
    let optimal_utility = model.optimal_utility(param);
    Ok(RegretValue {
        value: optimal_utility - achieved_utility,
        optimal_utility,
        achieved_utility,
    })
}

/// Regret of a pure policy against every parameter.
pub fn regret_vector(model: &ExactModel<'_>, policy: &HistoryPolicy) -> Result<Vec<f64>> {
    Ok(utility_vector(model, policy)?
        .into_iter()
        .enumerate()
        .map(|(p, u)| model.optimal_utility(p) - u)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesianRegret {
    /// `E_Θ[𝔯(π, Θ)]`.
    pub value: f64,
    /// Supremum over parameter-aware maps of the mixture utility, minus the
    /// prior-averaged utility of the policy.
    pub decomposed: f64,
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

/// Prior-averaged utility computed node by node with weights
/// `prior[θ] · likelihood_θ`.
fn mixture_utility(model: &ExactModel<'_>, tree: &HistoryTree, policy: &HistoryPolicy, w: &[f64]) -> f64 {
    let mut total = 0.0;
    for (node, n) in tree.nodes.iter().enumerate() {
        if let Some(a) = policy.action(node) {
            let mut node_value = 0.0;
            for (p, &wp) in w.iter().enumerate() {
                node_value += wp * n.likelihood[p] * model.expected_reward(p, n.state, a);
            }
            total += node_value;
        }
    }
    total
}

/// `sup_{f: S × O → A} E[Σ_t r(Y_t, f(S_t, Θ))]`, by brute force over
/// stationary maps evaluated on the history tree. The supremum separates
/// across parameters because `f` may depend on `Θ`.
fn parameter_aware_sup(model: &ExactModel<'_>, tree: &HistoryTree, w: &[f64]) -> f64 {
    let m = model.instance();
    let count = stationary_map_count(m);
    if count > DECOMPOSED_MAP_LIMIT {
        return w
            .iter()
            .enumerate()
            .map(|(p, &wp)| wp * model.optimal_utility(p))
            .sum();
    }
    let mut best = vec![f64::NEG_INFINITY; w.len()];
    let mut map = vec![0usize; m.n_states];
    for _ in 0..count {
        let pol = HistoryPolicy::from_stationary(tree, &map);
        let mut u = vec![0.0; w.len()];
        for (node, n) in tree.nodes.iter().enumerate() {
            if let Some(a) = pol.action(node) {
                for (p, acc) in u.iter_mut().enumerate() {
                    *acc += n.likelihood[p] * model.expected_reward(p, n.state, a);
                }
            }
        }
        for (b, x) in best.iter_mut().zip(u) {
            *b = b.max(x);
        }
        for i in (0..m.n_states).rev() {
            map[i] += 1;
            if map[i] < m.n_actions {
                break;
            }
            map[i] = 0;
        }
    }
    w.iter().zip(best).map(|(wp, b)| wp * b).sum()
}

/// Bayesian regret of a pure or mixed policy. The decomposed form is always
/// computed as well, and a disagreement beyond [`CROSS_CHECK_TOL`] is an
/// error.
pub fn bayesian_regret<'p>(
    model: &ExactModel<'_>,
    policy: impl Into<PolicyRef<'p>>,
    prior: &Prior,
) -> Result<BayesianRegret> {
    check_prior(model, prior)?;
    let tree = model.tree()?;
    let w = prior.weights();
    let (support, weights): (Vec<&HistoryPolicy>, Vec<f64>) = match policy.into() {
        PolicyRef::Pure(p) => (vec![p], vec![1.0]),
        PolicyRef::Mixed(mix) => (mix.support.iter().collect(), mix.weights.clone()),
    };
    let mut direct = 0.0;
    let mut mixture = 0.0;
    for (pol, &pw) in support.iter().zip(&weights) {
        let r = regret_vector(model, pol)?;
        direct += pw * w.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
        mixture += pw * mixture_utility(model, tree, pol, w);
    }
    let decomposed = parameter_aware_sup(model, tree, w) - mixture;
    if (direct - decomposed).abs() > CROSS_CHECK_TOL {
        return Err(Error::CrossCheck { direct, decomposed });
    }
    Ok(BayesianRegret {
        value: direct,
        decomposed,
    })
}

#[derive(Debug, Clone)]
pub struct MbrValue {
    pub value: f64,
    pub policy: HistoryPolicy,
    /// Minimum over the enumerated catalog, when it was small enough.
    pub brute_force: Option<f64>,
}

/// Minimum Bayesian regret `𝔉(prior)` via the Bayes-optimal policy,
/// cross-checked against the enumerated catalog when it is small.
pub fn mbr(model: &ExactModel<'_>, prior: &Prior) -> Result<MbrValue> {
    check_prior(model, prior)?;
    let best = bayes_optimal_policy(model, prior)?;
    let tree = model.tree()?;
    let brute_force = if policy_count(tree) <= MBR_CROSS_CHECK_LIMIT {
        let w = prior.weights();
        let mut min = f64::INFINITY;
        for p in enumerate_policies(model)? {
            let r = regret_vector(model, &p)?;
            min = min.min(w.iter().zip(&r).map(|(a, b)| a * b).sum());
        }
        if (min - best.bayes_regret).abs() > CROSS_CHECK_TOL {
            return Err(Error::CrossCheck {
                direct: best.bayes_regret,
                decomposed: min,
            });
        }
        Some(min)
    } else {
        None
    };
    Ok(MbrValue {
        value: best.bayes_regret,
        policy: best.policy,
        brute_force,
    })
}
