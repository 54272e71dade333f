//! Experiment harness, file formats and CLI support for `rpeper-core`.

pub mod checkpoint;
pub mod config;
mod error;
pub mod harness;
pub mod snapshot;
pub mod stats;

pub use error::{Error, Result};
pub use rpeper_core as core;
