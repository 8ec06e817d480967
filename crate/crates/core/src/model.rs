//! Shared exact-evaluation context for one instance.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::env_model::{Layout, MdpClass};
use crate::error::{Error, Result};
use crate::policy::stationary::{optimal_stationary_map, StationaryOptimum};
use crate::policy::tree::HistoryTree;

/// Resource limits for exact computations. Operations refuse with
/// [`Error::CapExceeded`] instead of silently approximating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub tree_nodes: usize,
    pub policies: usize,
    pub stationary_maps: usize,
    /// Largest policy catalog solved as a single explicit linear program.
    pub lp_policies: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            tree_nodes: 100_000,
            policies: 1_000_000,
            stationary_maps: 1_000_000,
            lp_policies: 10_000,
        }
    }
}

/// An instance together with its per-parameter omniscient optima and a lazily
/// built history tree.
pub struct ExactModel<'a> {
    instance: &'a MdpClass,
    caps: Caps,
    optima: Vec<StationaryOptimum>,
    /// `[param][state][action]` expected one-step reward.
    rewards: Vec<Vec<Vec<f64>>>,
    tree: OnceLock<std::result::Result<HistoryTree, (u128, u128)>>,
}

impl<'a> ExactModel<'a> {
    pub fn new(instance: &'a MdpClass) -> Result<Self> {
        Self::with_caps(instance, Caps::default())
    }

    pub fn with_caps(instance: &'a MdpClass, caps: Caps) -> Result<Self> {
        let rewards = (0..instance.n_params)
            .map(|p| {
                (0..instance.n_states)
                    .map(|s| (0..instance.n_actions).map(|a| instance.expected_reward(p, s, a)).collect())
                    .collect()
            })
            .collect();
        let optima = (0..instance.n_params)
            .map(|p| optimal_stationary_map(instance, p, caps.stationary_maps))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            instance,
            caps,
            optima,
            rewards,
            tree: OnceLock::new(),
        })
    }

    pub fn instance(&self) -> &'a MdpClass {
        self.instance
    }

    pub fn caps(&self) -> &Caps {
        &self.caps
    }

    pub fn n_params(&self) -> usize {
        self.instance.n_params
    }

    /// Omniscient stationary optimum for parameter `param`.
    pub fn optimum(&self, param: usize) -> &StationaryOptimum {
        &self.optima[param]
    }

    pub fn optimal_utility(&self, param: usize) -> f64 {
        self.optima[param].utility
    }

    #[inline]
    pub fn expected_reward(&self, param: usize, state: usize, action: usize) -> f64 {
        self.rewards[param][state][action]
    }

    pub fn tree(&self) -> Result<&HistoryTree> {
        let built = self
            .tree
            .get_or_init(|| HistoryTree::build(self.instance, self.caps.tree_nodes));
        match built {
            Ok(t) => Ok(t),
            Err((count, cap)) => Err(Error::CapExceeded {
                what: "history tree nodes",
                count: *count,
                cap: *cap,
            }),
        }
    }

    pub fn is_folded(&self) -> bool {
        self.instance.layout == Layout::ActionFolded
    }
}
