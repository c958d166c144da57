//! Uplink multiuser receivers for massive MIMO arrays with an extremely large
//! aperture.
//!
//! The array is split into disjoint subarrays. Three receivers are provided:
//!
//! * centralized zero-forcing over the full array ([`lindet::detect_zf`]),
//! * distributed linear data fusion of per-subarray ZF estimates
//!   ([`lindet::detect_dldf`]),
//! * a decentralized peeling detector that builds a user/subarray bipartite
//!   graph from the channel and resolves users by successive interference
//!   cancellation ([`graphsic::peel_detect`]).
//!
//! [`harness`] drives Monte-Carlo bit-error-rate sweeps over these detectors,
//! and [`complexity`] provides closed-form multiplication counts together with
//! the counters threaded through every detection path.

pub mod channel;
pub mod complexity;
pub mod error;
pub mod geometry;
pub mod graphsic;
pub mod harness;
pub mod lindet;
pub mod linalg;
pub mod matio;
pub mod modem;

pub use channel::{ChannelMatrix, PathlossModel, SubarrayLayout, SubarrayPartition};
pub use complexity::{CostReport, MulCount, MulCounter};
pub use error::{Error, Result};
pub use geometry::{Point, SystemConfig, UserLayout};
pub use graphsic::{BipartiteGraph, PeelingTrace, SicOptions};
pub use harness::{DetectionReport, Detector, SweepParam, SweepSpec};
pub use linalg::{CMatrix, Matrix, RMatrix, C64};
pub use modem::{Constellation, Decision};
