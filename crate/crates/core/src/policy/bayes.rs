//! Bayes-optimal policy by backward induction on the history tree.
//!
//! Node values are kept unnormalized: the weight of parameter `θ` at a node
//! is `prior[θ] · likelihood_θ(node)`, so the value at the roots is directly
//! the prior-averaged utility.

use super::{HistoryPolicy, NodeId};
use crate::env_model::Prior;
use crate::error::{Error, Result};
use crate::model::ExactModel;

const TIE_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct BayesOptimal {
    pub policy: HistoryPolicy,
    /// `E_Θ[U(π, Θ)]`.
    pub bayes_utility: f64,
    /// `E_Θ[U*(Θ)] − bayes_utility`, the minimum Bayesian regret.
    pub bayes_regret: f64,
}

pub fn bayes_optimal_policy(model: &ExactModel<'_>, prior: &Prior) -> Result<BayesOptimal> {
    if prior.len() != model.n_params() {
        return Err(Error::invalid(format!(
            "prior has {} entries, instance has {} parameters",
            prior.len(),
            model.n_params()
        )));
    }
    let tree = model.tree()?;
    let w = prior.weights();
    let mut value = vec![0.0; tree.len()];
    let mut choice = vec![0usize; tree.len()];
    for node in tree.bottom_up() {
        let n = &tree.nodes[node];
        let mut best = f64::NEG_INFINITY;
        let mut best_a = 0;
        for a in 0..tree.n_actions() {
            let mut v: f64 = (0..w.len())
                .map(|p| w[p] * n.likelihood[p] * model.expected_reward(p, n.state, a))
                .sum();
            for (_, _, c) in tree.children(node, a) {
                v += value[c];
            }
            if a == 0 || v > best + TIE_TOL * (1.0 + best.abs()) {
                best = v;
                best_a = a;
            }
        }
        value[node] = best;
        choice[node] = best_a;
    }
    let bayes_utility: f64 = tree.roots.iter().map(|&r| value[r]).sum();
    let optimal: f64 = (0..w.len()).map(|p| w[p] * model.optimal_utility(p)).sum();
    let policy = HistoryPolicy::from_fn(tree, |node: NodeId| choice[node]);
    Ok(BayesOptimal {
        policy,
        bayes_utility,
        bayes_regret: optimal - bayes_utility,
    })
}
