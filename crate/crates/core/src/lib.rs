//! Finite-volume simulation of the porous medium equation with Newtonian
//! chemotactic drift and pressure-limited growth, with diagnostics for the
//! stiff-pressure (`m → ∞`) limit.

pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod grid;
pub mod harness;
pub mod model;
pub mod potential;
pub mod snapshot;
pub mod stepper;

pub use error::{Error, Result};
