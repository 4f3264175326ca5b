//! Attention-aware forward collision warning (FCW).
//!
//! The crate models what a driver believes about the lead vehicle while
//! looking away, and uses that belief to adjust collision warnings:
//!
//! - [`kinematics`]: episode and trajectory types, validation, resampling,
//!   longitudinal gap geometry and the episode file format
//! - [`counterfactual`]: constant-velocity extrapolation of the lead vehicle
//!   during inattentive windows
//! - [`warning`]: stop-distance warnings (conventional and attention-aware)
//!   and the AttenD gaze-buffer baselines
//! - [`forecasting`]: pluggable joint forecasters and the minimum-future-gap rule
//! - [`synthgen`]: seeded synthetic episode generator with ground-truth labels
//! - [`evaluation`]: majority-vote labels, TPR/TNR/UAR and warning buffer time
//! - [`method`]: the six evaluated warning methods behind one dispatch point

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterfactual;
pub mod error;
pub mod evaluation;
pub mod forecasting;
pub mod kinematics;
pub mod method;
pub mod synthgen;
pub mod warning;

pub use error::{FcwError, Result, Violation};
pub use kinematics::{Annotation, AttentionTrace, Episode, Trajectory, VehicleState};
pub use warning::{FcwParams, WarningTrace};
