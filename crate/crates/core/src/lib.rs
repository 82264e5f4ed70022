//! Gradient-kernel regression at desk scale.
//!
//! The kernel of two inputs, at a fixed parameter vector of a differentiable
//! model, is the dot product of their per-example output gradients. Fitting
//! a least-squares regression over a small basis of those kernel columns
//! gives a classifier whose accuracy can be compared against the underlying
//! network as SGD moves the parameters — including at epoch 0, before any
//! training at all.
//!
//! The crate is organized along that pipeline:
//!
//! - [`model`]: a small MLP with deterministic init and exact reverse-mode
//!   per-example gradients,
//! - [`kernel`]: raw and cosine-normalized kernel matrices, plus the
//!   discrete path kernel over parameter checkpoints,
//! - [`regression`]: rank-safe least squares over kernel columns and
//!   threshold scoring,
//! - [`data`]: IDX ingestion, balanced binary tasks, synthetic blobs,
//! - [`trainer`]: seeded SGD epochs and network accuracy,
//! - [`harness`]: the per-epoch experiment loop and CSV outputs.
//!
//! Everything downstream of a seed is deterministic: same config, same
//! bytes out.

pub mod data;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod model;
pub mod regression;
pub mod rng;
pub mod trainer;

pub use data::{DataSource, DataView, Dataset, RawIdx, SplitPlan};
pub use error::{Error, Result};
pub use harness::{EpochRecord, ExperimentConfig, ExperimentOutcome, SourceConfig};
pub use kernel::{CheckpointTrail, KernelKind, KernelMatrix};
pub use model::{Activation, ModelSpec, ParamMask, ParamVector, PerExampleGradient};
pub use regression::{EvalReport, FitDiagnostics, RegressionFit};
pub use trainer::TrainConfig;
