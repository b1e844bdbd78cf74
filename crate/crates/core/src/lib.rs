//! Interdependent-security population game on degree-structured networks.
//!
//! Nodes choose to protect (`P`), do nothing (`N`) or insure (`I`). Each
//! node's cost depends on its degree and on the network-wide risk exposure,
//! which falls as more of the population protects. The crate computes:
//!
//! - risk exposure and per-action costs at any social state ([`exposure`]),
//! - the Nash equilibrium and its degree threshold ([`equilibrium`]),
//! - the social optimum with derivative certificates ([`optimum`]),
//! - the price of anarchy and its closed-form bound ([`poa`]),
//! - branching-process cascade probabilities ([`cascade`]),
//! - a Monte-Carlo configuration-model simulator that checks them ([`mc`]).

pub mod cascade;
pub mod equilibrium;
mod error;
pub mod exposure;
pub mod mc;
pub mod model;
pub mod optimum;
pub mod poa;

pub use error::{Error, Result};
pub use equilibrium::{solve_ne, EquilibriumResult, ThresholdProfile, Tolerances};
pub use exposure::{Action, ActionMasses, SocialState};
pub use model::{DegreeDistribution, ModelParams, ParamSpec};
pub use optimum::{solve_opt, OptimumResult, SpAction};
