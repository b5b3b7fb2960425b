//! Dynamic principal-agent model of gig work.
//!
//! A risk-neutral employer offers a myopic CARA worker one linear contract
//! per round. The worker accepts only if the offer is worth at least the
//! reference value, an exponentially weighted average of past net wages.
//!
//! - [`model`]: single-round mechanics (effort, certainty equivalents,
//!   binding fixed wage, reference update).
//! - [`deterministic`]: closed-form threshold solution without noise.
//! - [`simulator`]: seeded Monte Carlo of the repeated game.
//! - [`dp`]: value iteration for the noisy control problem.

pub mod deterministic;
pub mod dp;
mod error;
pub mod model;
pub mod quadrature;
pub mod search;
pub mod simulator;

pub use error::{Error, ParamField, Result};
pub use model::{Contract, ModelParams, RoundOutcome, WorkerState};
