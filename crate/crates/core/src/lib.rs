//! Sparse multi-layer perceptrons whose connectivity is defined between
//! groups of `m` neighbouring neurons ("motifs") rather than between single
//! neurons, trained with sparse evolutionary training (prune-and-regrow
//! between epochs).
//!
//! The crate is organised along the training pipeline:
//!
//! - [`topology`]: block masks and their Erdős–Rényi sampling
//! - [`network`]: parameters, forward/backward passes, SGD, checkpoints
//! - [`evolution`]: between-epoch prune-and-regrow
//! - [`data`]: IDX / CSV ingestion, preprocessing, splits, cached containers
//! - [`metrics`]: run bookkeeping, analytic multiply-accumulate counts, the
//!   comprehensive efficiency/accuracy score and its weight sweep
//! - [`experiment`]: configuration files and the training/scoring runner
//!   behind the `motifset` binary
//!
//! Runnable walkthroughs for each piece live in the crate's `examples/`.

pub mod data;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod metrics;
pub mod network;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
pub use network::{Activation, InitScheme, Network, NetworkConfig, WeightMode};
pub use topology::{BlockDensitySpec, DensityMode, MotifTopology, OutputGranularity};
