//! Scale-free online learning for adversarial bandits and adversarial
//! tabular MDPs.
//!
//! The bandit learners clip each observed loss to a running threshold,
//! offset it to be non-negative and feed an importance-weighted estimate to
//! an FTRL step; the resulting arm sequence is invariant to rescaling the
//! losses. The MDP learner applies the same idea per layer on top of an
//! occupancy-measure FTRL with transition confidence sets and explicit
//! exploration policies.

pub mod bandit;
pub mod clip;
pub mod error;
pub mod explore;
pub mod harness;
pub mod mdp;
pub mod rng;
pub mod simplex;
pub mod uob;

pub use error::{Error, Result};
