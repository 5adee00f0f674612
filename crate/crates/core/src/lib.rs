//! Station-level bike-share demand prediction built around graph
//! convolutional networks with a trainable symmetric graph filter.
//!
//! The crate covers the whole pipeline: trip-transaction ingestion, hourly
//! demand matrices, fixed and learned graph filters, the GCNN architectures
//! plus classical baselines, and a deterministic training/evaluation loop.

pub mod activation;
pub mod autodiff;
pub mod container;
pub mod data;
pub mod error;
pub mod graph;
pub mod model;
pub mod tensor;
pub mod train;

pub use activation::ActivationKind;
pub use autodiff::{finite_diff_grad, NodeId, Tape};
pub use error::{Error, Result};
pub use tensor::Tensor;

/// Name of the seeded generator used everywhere randomness is needed;
/// recorded in artifact manifests so checkpoints are reproducible.
pub const RNG_ALGORITHM: &str = "chacha8";
