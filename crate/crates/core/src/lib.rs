//! Online false discovery rate control with adaptive discarding.
//!
//! The crate implements ADDIS* and its relatives (SAFFRON, LORD++, D-LORD*,
//! LOND, alpha-investing), the asynchronous variant ADDIS*_async, the offline
//! procedures BH, Storey-BH and D-StBH, a seeded Gaussian-means simulation
//! harness, and the `(θ, τ)` tuning surface used to pick the candidate and
//! discarding thresholds.
//!
//! Runnable walkthroughs live in `examples/`; the `fdrlab` binary exposes the
//! same functionality on CSV and JSON files.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod async_alg;
pub mod cli;
pub mod error;
pub mod gamma;
pub mod normal;
pub mod offline;
pub mod online;
pub mod simulation;
pub mod tuning;
pub mod types;

pub use error::{FdrError, Result};
pub use gamma::GammaSequence;
pub use normal::{std_normal_cdf, std_normal_quantile};
pub use online::{AlgorithmKind, OnlineAlgorithm};
pub use types::{AlgorithmConfig, DecisionRecord, GammaSpec, PValueRecord, StepOutcome, StreamTruth};
