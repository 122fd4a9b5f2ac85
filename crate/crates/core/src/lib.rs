//! Space-time orthogonalization of panel-based LIS channels through
//! receive-and-retransmit (RRTx) processing at low-power panels.
//!
//! The modules follow the processing chain:
//!
//! - [`channel`]: IID Rayleigh realizations of the direct and RRTx channels.
//! - [`ortho`]: RRTx processing that makes the stacked ISI channel orthogonal.
//! - [`powmin`]: closed-form minimum-power choice of the remaining DoF, with
//!   enumeration and geodesic-descent oracles.
//! - [`isi`]: stacked ISI channel, uplink simulation, MRC and capacities.
//! - [`baseline`]: fully-active three-panel ZF and MRC receivers.

// `!(x > 0.0)` rejects NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod channel;
pub mod error;
pub mod isi;
pub mod linalg;
pub mod ortho;
pub mod powmin;
pub mod stats;

pub use baseline::{mrc_capacity, stack_active, zf_capacity, StackedActiveChannel};
pub use channel::{sample_channel_set, ChannelSet, Dimensions};
pub use error::{Error, Result};
pub use isi::{
    build_isi_matrix, capacity_exact, capacity_white, mrc_combine, simulate_uplink, CapacityReport, IsiChannel,
};
pub use linalg::{CMat, CVec, Complex64};
pub use ortho::{
    build_b, build_htilde, check_feasibility, decompose_h0, gram_blocks, min_beta, orthogonalize, solve_theta,
    Feasibility, H0Svd, Infeasibility, RrtxSolution,
};
pub use powmin::{
    assemble_utilde, brute_force_min, checked_channels, descent_verifier, euclidean_gradient, minimize_power,
    optimal_pairing, pairing_power, riemannian_gradient, CheckedChannels, PairingPlan,
};
