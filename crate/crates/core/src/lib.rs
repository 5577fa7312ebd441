//! Meta-learning on transformed point sets.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: point clouds, unit-ball normalization and the density,
//!   dropping and self-occlusion transforms.
//! - [`nn`]: a max-pooling point classifier with exact gradients, SGD and
//!   Adam, and checkpoints.
//! - [`meta`]: task sets, soft-sampling, the meta-training loop and its
//!   ablation baselines.
//! - [`data`]: synthetic shape datasets, train/validation splits, held-out
//!   target domains and dataset I/O.
//! - [`benchmark`]: the desk-scale synthetic domain-generalization benchmark.
//! - [`cli`]: the command-line front end used by the `metasets` binary.

pub mod benchmark;
pub mod cli;
pub mod data;
pub mod error;
pub mod geometry;
pub mod meta;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
