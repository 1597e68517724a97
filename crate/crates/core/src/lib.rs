//! Dynamic-programming track-before-detect.
//!
//! Targets are tracked on a trellis: state sets unrolled over time, with a
//! real-valued edge observation on every feasible transition. For each vertex
//! the engine computes the longest k-length path average (LPA-k), the largest
//! mean edge weight over all k-edge paths ending there. The detector turns an
//! LPA-k field into detections with adaptive per-segment thresholds.
//!
//! Edge-observation constructors and engine modes are interchangeable
//! strategies, looked up by name in a [`Registry`] so configuration files and
//! the CLI can select them at runtime.

// `!(x > y)` checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod detector;
pub mod edge;
pub mod engine;
pub mod error;
pub mod io;
pub mod observation;
pub mod pipeline;
pub mod registry;
pub mod space;
pub mod synth;
pub mod topology;

pub use error::{Error, Result};
pub use registry::Registry;
