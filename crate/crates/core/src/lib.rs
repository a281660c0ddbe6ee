//! Variable-shot meta-learning.
//!
//! The crate is organised bottom-up:
//!
//! - [`autodiff`]: a matrix tape whose gradients are themselves differentiable.
//! - [`model`]: dense networks, batches, losses.
//! - [`tasks`]: synthetic task families and incrementally arriving datasets.
//! - [`meta`]: inner updates, learning-rate policies (including the
//!   shot-scaled rate), meta-objectives, Adam, checkpoints.
//! - [`online`]: the online incremental loop with proficiency-gated task
//!   advancement and regret accounting.
//! - [`verify`]: Monte-Carlo oracles for the optimal s-shot learning rate and
//!   the gradient-variance law.

pub mod autodiff;
pub mod error;
pub mod meta;
pub mod model;
pub mod online;
pub mod seed;
pub mod tasks;
pub mod verify;

pub use error::{Error, Result};
