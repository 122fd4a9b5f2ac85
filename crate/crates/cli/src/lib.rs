//! Experiment driver for the RRTx orthogonalization library: JSON
//! configuration, seeded Monte-Carlo sweeps with CSV output, and the
//! invariant verification suite.

// `!(x > 0.0)` rejects NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod seeds;
pub mod sweep;
pub mod verify;

pub use config::{BetaPolicy, DimsConfig, ExperimentConfig, NoiseConfig};
pub use error::CliError;
pub use sweep::{run_capacity_sweep, run_power_sweep, Method, SweepResult, SweepRow};
pub use verify::{run_verify, PropertyCheck, VerifyReport};
