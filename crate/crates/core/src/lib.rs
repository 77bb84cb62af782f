//! Tabular episodic Markov games and decentralized equilibrium learning.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core: the game model and its exact dynamic-programming evaluators, the
//! adversarial bandit subroutines, stage-based V-learning with certified
//! output policies, independent policy gradient for potential games, the
//! benchmark environments and the baselines used to compare against them.
//! File formats, configuration and the experiment driver live in the `marl`
//! crate.

#![no_std]

#[cfg(feature = "std")]
extern crate std;

extern crate alloc;

pub mod bandit;
pub mod baselines;
pub mod certify;
pub mod dp;
pub mod env;
pub mod envs;
mod error;
pub mod game;
pub(crate) mod math;
pub mod pg;
pub mod policy;
pub mod rng;
pub mod vlearning;

pub use error::{Error, Result};
pub use game::{MarkovGame, RewardScale};
pub use policy::ProductPolicy;
