//! Interference alignment toolkit for K-user MIMO interference channels.
//!
//! The crate is organized bottom-up: [`numerics`] holds the dense complex
//! kernels, [`channel`] the network and channel models, [`alignment`] the
//! filter-design algorithms, [`metrics`] rates and baselines, and
//! [`harness`] the seeded Monte-Carlo experiments behind the `ialign` CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod channel;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod serial;

pub use alignment::{
    closed_form_ia_3user, run_interference_avoidance, run_max_sinr, run_min_leakage, Init, IterationTrace, Solution,
    SolverOptions, StopReason,
};
pub use channel::{generate_network, reciprocal_channels, ChannelSet, NetworkConfig, RelayParams};
pub use error::{Error, Result};
