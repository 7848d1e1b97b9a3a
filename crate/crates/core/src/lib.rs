//! Bergman minimal model of plasma glucose driven by basal-plus-pulse insulin.
//!
//! The crate covers the whole pipeline from simulation to certification:
//!
//! - [`model`]: parameters, insulin schedules, meal absorption and the
//!   closed-form responses of the linear insulin chain;
//! - [`simulate`]: fixed-step integration of `ġ = −h·g + w` with exact
//!   linear states, extrema detection and envelope bounds;
//! - [`dose`]: bisection for the *proper* bolus magnitude, the one whose
//!   response touches the floor `λ` but never goes below it;
//! - [`optimize`]: the delivery time that minimises the glucose peak `γ`,
//!   together with an optimality certificate;
//! - [`multipulse`]: sequential multi-pulse plans, interlacing checks and
//!   crossing counts.
//!
//! Everything is `no_std` with `alloc`; file formats and the command line
//! live in the companion `glucopt` crate.

#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

mod error;
mod kernel;
mod math;

pub mod dose;
pub mod model;
pub mod multipulse;
pub mod optimize;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{BolusPulse, InputSchedule, MealImpulse, MealModel, ModelParams};
pub use simulate::{GlucoseTrace, Grid, Scenario, Tolerances};
