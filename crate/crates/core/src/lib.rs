//! Core algorithms for reward-prediction-error prioritised experience replay.
//!
//! This crate is `no_std` (it needs `alloc`) and contains only pure
//! computation:
//!
//! * [`replay`]: a bounded FIFO experience store backed by a sum tree, with
//!   proportional stratified sampling and importance-sampling weights.
//! * [`nn`]: dense feed-forward networks with exact reverse-mode gradients,
//!   an Adam optimizer and Polyak blending.
//! * [`emcn`]: the three-headed critic (Q-value, reward, next state) with its
//!   combined loss and the reward-prediction-error score.
//! * [`agents`]: TD3 and SAC agents that drive the replay buffer with
//!   uniform, TD-error or reward-prediction-error priorities.
//! * [`envs`]: deterministic toy continuous-control environments.
//!
//! File formats, configuration and the experiment harness live in the
//! `rpeper` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agents;
pub mod emcn;
pub mod envs;
mod error;
pub mod nn;
pub mod replay;

pub use error::{Error, Result};
