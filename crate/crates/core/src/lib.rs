//! Constrained reinforcement learning with a utility-maximizing policy whose
//! proposals are edited by a safety policy, trained off-policy with a
//! Lagrangian multiplier on the constraint reward.

pub mod baselines;
pub mod diffcore;
pub mod dists;
pub mod envs;
pub mod harness;
pub mod rng;
pub mod seditor;
pub mod state;
