//! Low-dimensional state observers for stable single-input single-output
//! LTI plants, built from moment-matching reduced-order models.
//!
//! The pipeline is: a plant `(A, B, C)` and a signal generator `(S, L)`
//! give the Sylvester solution `Π` and the moment `CΠ`; a gain `G` picks a
//! reduced model `(S − GL, G, CΠ)`; an injection gain `K` turns it into an
//! observer of dimension `ν` whose state lifts to a full-state estimate
//! `x̂ = Πξ̂`. The [`observer`] and [`analysis`] modules certify the error
//! dynamics and evaluate the exponential ISS bound; [`simulation`] runs
//! plant and observer side by side.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod observer;
pub mod reduction;
pub mod simulation;
pub mod systems;

pub use error::{Error, LinalgError, Result};
pub use linalg::{Matrix, Spectrum, Vector};
