//! Winner-less competition (WLC) Lotka–Volterra networks that drive sequences of
//! motor motifs, plus the teacher–learner machinery that lets one network copy
//! another's motif graph and motif durations by observation alone.
//!
//! Module map:
//!
//! * [`graph`] – motif-succession permutations and pathway matrices.
//! * [`dynamics`] – coupling matrices, RK4 integration, switching analysis, α calibration.
//! * [`learning`] – duration learning, the edge regression criterion and structure learning.
//! * [`motifsim`] – decoding neural activity into unicycle robot motion.
//! * [`metrics`] – path curvature and the lag-minimized curvature distance.
//! * [`pipeline`] – the end-to-end imitation run, teacher robot to learner robot.
//! * [`sweep`] – seeded batches of structure-learning trials.
//!
//! Vertices and neurons are labelled `1..=n` at every public interface.

// `!(x > 0.0)` is deliberate throughout: it rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod graph;
pub mod learning;
pub mod metrics;
pub mod motifsim;
pub mod pipeline;
pub mod rng;
pub mod series;
pub mod sweep;

mod ode;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
