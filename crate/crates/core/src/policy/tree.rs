//! The reachable history tree of an instance.
//!
//! A node is a decision point `(t, S_t, H^t)`. Its `likelihood[θ]` is the
//! probability of the observed path (initial state, outcomes and transitions)
//! under `θ` given the actions on the path; action choices themselves are not
//! part of it. A node exists when that likelihood is positive for at least one
//! parameter.

use crate::env_model::MdpClass;

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct TreeNode {
    /// Zero-based step index.
    pub t: usize,
    pub state: usize,
    pub likelihood: Vec<f64>,
    /// `(a * n_outcomes + y) * n_states + s'`; empty on the last step.
    children: Vec<Option<NodeId>>,
}

#[derive(Debug, Clone)]
pub struct HistoryTree {
    pub nodes: Vec<TreeNode>,
    pub roots: Vec<NodeId>,
    n_actions: usize,
    n_outcomes: usize,
    n_states: usize,
}

impl HistoryTree {
    /// Breadth-first construction; fails with `(count, cap)` once the node
    /// count passes `cap`.
    pub fn build(m: &MdpClass, cap: usize) -> Result<Self, (u128, u128)> {
        let mut nodes: Vec<TreeNode> = Vec::new();
        let mut roots = Vec::new();
        for s in 0..m.n_states {
            let likelihood: Vec<f64> = (0..m.n_params).map(|p| m.init[p][s]).collect();
            if likelihood.iter().any(|&l| l > 0.0) {
                roots.push(nodes.len());
                nodes.push(TreeNode {
                    t: 0,
                    state: s,
                    likelihood,
                    children: Vec::new(),
                });
            }
        }
        if nodes.len() > cap {
            return Err((nodes.len() as u128, cap as u128));
        }
        let stride = m.n_outcomes * m.n_states;
        let mut cursor = 0;
        while cursor < nodes.len() {
            let (t, s) = (nodes[cursor].t, nodes[cursor].state);
            if t + 1 >= m.horizon {
                cursor += 1;
                continue;
            }
            let mut children = vec![None; m.n_actions * stride];
            for a in 0..m.n_actions {
                for y in 0..m.n_outcomes {
                    for s2 in 0..m.n_states {
                        let likelihood: Vec<f64> = (0..m.n_params)
                            .map(|p| {
                                nodes[cursor].likelihood[p]
                                    * m.outcome[p][s][y]
                                    * m.transition[p][s][a][s2]
                            })
                            .collect();
                        if likelihood.iter().any(|&l| l > 0.0) {
                            children[a * stride + y * m.n_states + s2] = Some(nodes.len());
                            nodes.push(TreeNode {
                                t: t + 1,
                                state: s2,
                                likelihood,
                                children: Vec::new(),
                            });
                            if nodes.len() > cap {
                                return Err((nodes.len() as u128, cap as u128));
                            }
                        }
                    }
                }
            }
            nodes[cursor].children = children;
            cursor += 1;
        }
        Ok(Self {
            nodes,
            roots,
            n_actions: m.n_actions,
            n_outcomes: m.n_outcomes,
            n_states: m.n_states,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Children reached after playing `action` at `node`, as
    /// `(outcome, next_state, child)`.
    pub fn children(&self, node: NodeId, action: usize) -> impl Iterator<Item = (usize, usize, NodeId)> + '_ {
        let stride = self.n_outcomes * self.n_states;
        let n_states = self.n_states;
        let kids = &self.nodes[node].children;
        let range = if kids.is_empty() {
            0..0
        } else {
            action * stride..(action + 1) * stride
        };
        range.filter_map(move |i| kids[i].map(|c| ((i % stride) / n_states, i % n_states, c)))
    }

    /// Nodes in reverse construction order: every child precedes its parent.
    pub fn bottom_up(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).rev()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_model::build_finite_mab;

    #[test]
    fn deterministic_two_arm_tree() {
        let m = build_finite_mab(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let tree = HistoryTree::build(&m, 1000).unwrap();
        // root plus two reachable outcomes per action
        assert_eq!(tree.len(), 5);
        assert_eq!(tree.children(0, 0).count(), 2);
        assert_eq!(tree.children(0, 1).count(), 2);
        for (y, s2, c) in tree.children(0, 1) {
            assert_eq!(s2, 0);
            assert_eq!(tree.nodes[c].t, 1);
            assert!(y == 1 || y == 2);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let m = build_finite_mab(&[vec![0.5, 0.5]], 4).unwrap();
        assert!(HistoryTree::build(&m, 10).is_err());
    }
}
