//! Exact regret hierarchy for finite MDP classes with an unknown parameter.
//!
//! Instances ([`MdpClass`]) are small enough that utilities, Bayesian regret,
//! minimum Bayesian regret and the minimax regret game can be evaluated
//! exactly on the reachable history tree. On top of that sit the duality
//! certificate, Thompson-sampling rollouts and information-theoretic regret
//! bounds.

pub mod bounds;
pub mod env_model;
pub mod error;
pub mod game;
pub mod generator;
pub mod infotheory;
pub mod mc;
pub mod model;
pub mod policy;
pub mod regret;
pub mod simplex;

pub use env_model::{MdpClass, MetricTable, Prior};
pub use error::{Error, Result};
pub use model::{Caps, ExactModel};
