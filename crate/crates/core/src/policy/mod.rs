//! History-dependent policies over the reachable history tree.
//!
//! A [`HistoryPolicy`] assigns an action to every node reachable under its own
//! choices; nodes cut off by its earlier actions carry no decision, so two
//! policies are distinct exactly when they differ somewhere on their own
//! path.

pub mod bayes;
pub mod stationary;
pub mod thompson;
pub mod tree;

pub use bayes::{bayes_optimal_policy, BayesOptimal};
pub use stationary::{
    nonstationary_optimum, optimal_stationary_map, stationary_utility, StationaryOptimum,
};
pub use thompson::{
    simulate_ts, ts_action_law, ts_expected, ts_monte_carlo, TrajectoryLog, TsNode, TsStep, TsTree,
};
pub use tree::{HistoryTree, NodeId};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ExactModel;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HistoryPolicy {
    /// Indexed by [`NodeId`] of the model's history tree.
    actions: Vec<Option<u16>>,
}

impl HistoryPolicy {
    pub fn from_actions(actions: Vec<Option<u16>>) -> Self {
        Self { actions }
    }

    #[inline]
    pub fn action(&self, node: NodeId) -> Option<usize> {
        self.actions[node].map(usize::from)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Number of decision nodes on the policy's own reachable subtree.
    pub fn decision_count(&self) -> usize {
        self.actions.iter().filter(|a| a.is_some()).count()
    }

    /// Builds a policy from a per-node choice, keeping only nodes reached
    /// by its own actions.
    pub fn from_fn(tree: &HistoryTree, mut choose: impl FnMut(NodeId) -> usize) -> Self {
        let mut actions = vec![None; tree.len()];
        let mut stack: Vec<NodeId> = tree.roots.clone();
        while let Some(node) = stack.pop() {
            let a = choose(node);
            actions[node] = Some(a as u16);
            stack.extend(tree.children(node, a).map(|(_, _, c)| c));
        }
        Self { actions }
    }

    /// Uniformly random deterministic policy.
    pub fn random(tree: &HistoryTree, rng: &mut impl Rng) -> Self {
        let n = tree.n_actions();
        Self::from_fn(tree, |_| rng.random_range(0..n))
    }

    /// Plays the stationary map `map` regardless of history.
    pub fn from_stationary(tree: &HistoryTree, map: &[usize]) -> Self {
        Self::from_fn(tree, |node| map[tree.nodes[node].state])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPolicy {
    pub support: Vec<HistoryPolicy>,
    pub weights: Vec<f64>,
}

impl MixedPolicy {
    pub fn new(support: Vec<HistoryPolicy>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() || support.is_empty() {
            return Err(Error::invalid("mixed policy needs one weight per support policy"));
        }
        crate::env_model::check_simplex(&weights).map_err(Error::invalid)?;
        Ok(Self { support, weights })
    }

    pub fn singleton(policy: HistoryPolicy) -> Self {
        Self {
            support: vec![policy],
            weights: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PolicyRef<'p> {
    Pure(&'p HistoryPolicy),
    Mixed(&'p MixedPolicy),
}

impl<'p> From<&'p HistoryPolicy> for PolicyRef<'p> {
    fn from(p: &'p HistoryPolicy) -> Self {
        PolicyRef::Pure(p)
    }
}

impl<'p> From<&'p MixedPolicy> for PolicyRef<'p> {
    fn from(p: &'p MixedPolicy) -> Self {
        PolicyRef::Mixed(p)
    }
}

/// Number of distinct deterministic policies, saturating.
pub fn policy_count(tree: &HistoryTree) -> u128 {
    let mut count = vec![0u128; tree.len()];
    for node in tree.bottom_up() {
        let mut total: u128 = 0;
        for a in 0..tree.n_actions() {
            let mut prod: u128 = 1;
            for (_, _, c) in tree.children(node, a) {
                prod = prod.saturating_mul(count[c]);
            }
            total = total.saturating_add(prod);
        }
        count[node] = total;
    }
    tree.roots
        .iter()
        .fold(1u128, |acc, &r| acc.saturating_mul(count[r]))
}

/// Every distinct deterministic policy, in lexicographic order of choices
/// (root first, lower actions first).
pub fn enumerate_policies(model: &ExactModel<'_>) -> Result<Vec<HistoryPolicy>> {
    let tree = model.tree()?;
    let count = policy_count(tree);
    let cap = model.caps().policies as u128;
    if count > cap {
        return Err(Error::CapExceeded {
            what: "policies",
            count,
            cap,
        });
    }
    // partial assignments for the subtree below each node, built bottom-up
    let mut partial: Vec<Option<Vec<Vec<(u32, u16)>>>> = vec![None; tree.len()];
    for node in tree.bottom_up() {
        let mut out = Vec::new();
        for a in 0..tree.n_actions() {
            let kids: Vec<NodeId> = tree.children(node, a).map(|(_, _, c)| c).collect();
            let mut combos: Vec<Vec<(u32, u16)>> = vec![vec![(node as u32, a as u16)]];
            for &c in &kids {
                let sub = partial[c].as_ref().expect("children are processed first");
                combos = combos
                    .iter()
                    .flat_map(|prefix| {
                        sub.iter().map(move |s| {
                            let mut v = prefix.clone();
                            v.extend_from_slice(s);
                            v
                        })
                    })
                    .collect();
            }
            out.extend(combos);
        }
        for a in 0..tree.n_actions() {
            for (_, _, c) in tree.children(node, a) {
                partial[c] = None;
            }
        }
        partial[node] = Some(out);
    }
    let mut combos: Vec<Vec<(u32, u16)>> = vec![Vec::new()];
    for &r in &tree.roots {
        let sub = partial[r].as_ref().expect("root processed");
        combos = combos
            .iter()
            .flat_map(|prefix| {
                sub.iter().map(move |s| {
                    let mut v = prefix.clone();
                    v.extend_from_slice(s);
                    v
                })
            })
            .collect();
    }
    Ok(combos
        .into_iter()
        .map(|assignment| {
            let mut actions = vec![None; tree.len()];
            for (n, a) in assignment {
                actions[n as usize] = Some(a);
            }
            HistoryPolicy { actions }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::build_finite_mab;

    #[test]
    fn counts_match_examples() {
        let one_step = build_finite_mab(&[vec![0.2, 0.9]], 1).unwrap();
        let m = ExactModel::new(&one_step).unwrap();
        assert_eq!(enumerate_policies(&m).unwrap().len(), 2);

        let det = build_finite_mab(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let m = ExactModel::new(&det).unwrap();
        let all = enumerate_policies(&m).unwrap();
        assert_eq!(all.len(), 8);
        assert_eq!(policy_count(m.tree().unwrap()), 8);
        let distinct: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), 8);

        let one_arm = build_finite_mab(&[vec![0.4], vec![0.9]], 5).unwrap();
        let m = ExactModel::new(&one_arm).unwrap();
        assert_eq!(enumerate_policies(&m).unwrap().len(), 1);
    }

    #[test]
    fn policy_cap_is_reported() {
        let inst = build_finite_mab(&[vec![0.5, 0.5]], 3).unwrap();
        let caps = crate::model::Caps {
            policies: 10,
            ..Default::default()
        };
        let m = ExactModel::with_caps(&inst, caps).unwrap();
        match enumerate_policies(&m) {
            Err(Error::CapExceeded { what, count, .. }) => {
                assert_eq!(what, "policies");
                assert!(count > 10);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn enumeration_matches_count_on_generated_instances() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cfg = crate::generator::GenConfig {
            states: (1, 2),
            actions: (1, 2),
            outcomes: (1, 2),
            params: (1, 2),
            horizon: (1, 2),
            sparsity: 0.3,
        };
        for _ in 0..20 {
            let inst = crate::generator::random_instance(&mut rng, &cfg);
            let m = ExactModel::new(&inst).unwrap();
            let n = policy_count(m.tree().unwrap());
            if n <= 5000 {
                let all = enumerate_policies(&m).unwrap();
                assert_eq!(all.len() as u128, n);
                let distinct: std::collections::HashSet<_> = all.iter().collect();
                assert_eq!(distinct.len(), all.len());
            }
        }
    }
}
