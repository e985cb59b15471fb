//! Windowed EEG seizure detection with an additive neural model, tree-based
//! distillation for fast inference, and online back-propagation-free
//! test-time adaptation.
//!
//! The crate is organized along the pipeline:
//!
//! - [`signal`]: recording ingestion (CSV, EDF) and a synthetic generator
//! - [`features`]: line length, variance, and spectral band powers per
//!   1-second window
//! - [`nam`]: the additive teacher model, Adam training, grid search, and
//!   the LR/DNN baselines
//! - [`tree`] / [`mtnam`]: CART regression trees and the distilled model
//! - [`t3a`]: online centroid-based prediction adjustment with entropy
//!   gating
//! - [`eval`]: chronological splitting and window/event metrics
//! - [`mod@bench`]: FLOP accounting and latency measurement
//! - [`config`] / [`pipeline`]: the `mtnam` CLI stages
//!
//! See the `mtnam` binary for the end-to-end command line.

pub mod bench;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod model_io;
pub mod mtnam;
pub mod nam;
pub mod pipeline;
pub mod signal;
pub mod t3a;
pub mod tree;
pub mod util;

pub use error::{Error, Result};
