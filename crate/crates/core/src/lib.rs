//! Causal rate-constrained sampling of continuous Markov sources.
//!
//! The crate simulates Wiener-family and Ornstein-Uhlenbeck sources exactly on
//! a grid, samples them with symmetric innovation thresholds, transmits one
//! sign bit per sample, and reconstructs the MMSE estimate at the receiver.
//! Closed-form distortion-rate functions live in [`analytics`]; the
//! Monte Carlo engine that checks them lives in [`harness`].
//!
//! Trials run on rayon when the `parallel` feature is enabled (the default)
//! and sequentially otherwise; results are identical either way.

// NaN must fail the domain checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod control;
pub mod error;
pub mod exec;
pub mod harness;
pub mod policy;
pub mod process;
pub mod rng;
pub mod soi;
pub mod stats;

pub use error::{Result, SimError};
pub use policy::{StoppingRecord, ThresholdPolicy};
pub use process::{ProcessModel, ResidualSpec, SamplePath};
pub use soi::{EstimatePath, SoiStream};
