//! Benchmark engine for fair binary classification.
//!
//! The crate is organized as a pipeline:
//!
//! - [`data`]: tabular datasets, CSV ingestion, sensitive-feature encodings
//!   (binary, intersectional, parallel), splitting and a synthetic dual-label
//!   generator.
//! - [`model`]: a fully connected scorer with a minibatch trainer that accepts
//!   differentiable fairness penalties.
//! - [`metrics`]: group statistics for seven parity notions, the relative
//!   violation measure, accuracy, AUROC and the full evaluation report.
//! - [`premethods`], [`inmethods`], [`postmethods`]: bias-mitigation methods
//!   grouped by stage of intervention.
//! - [`bench`]: sweeps over methods, strengths and seeds, and the
//!   max-performance-under-violation tables and trade-off curve exports.
//! - [`cli`]: the `run` / `table` / `tradeoff` command-line surface.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod bench;
pub mod cli;
pub mod data;
pub mod error;
pub mod inmethods;
pub mod metrics;
pub mod model;
pub mod postmethods;
pub mod premethods;

pub use data::{SensitiveEncoding, SensitiveFormat, TabularDataset};
pub use error::{Error, Result};
pub use metrics::{EvaluationReport, FairnessNotion, GroupStatistics, OutputType};
pub use model::{Scorer, TrainConfig};
