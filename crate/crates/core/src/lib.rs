//! Numerical laboratory for open hyperbolic maps and their quantizations.
//!
//! The crate is organised bottom-up:
//!
//! * [`classical`] holds open maps (linear model, open baker, disk billiards),
//!   trapped-set samples, unstable Jacobians and word calculus.
//! * [`splitting`] extends the unstable direction off the trapped set with the
//!   graph transform and its fiber companion.
//! * [`thermo`] computes pressure, Bowen roots, box dimension, porosity and
//!   the exponent bookkeeping used by the quantum estimates.
//! * [`quantum`] builds dense quantizations and spectral diagnostics.
//! * [`fup`] measures restricted Fourier norms on fractal sets.
//! * [`runner`] wires everything into config-driven experiments.

pub mod classical;
pub mod cutoff;
pub mod error;
pub mod fup;
pub mod linalg;
pub mod phase;
pub mod quantum;
pub mod runner;
pub mod splitting;
pub mod thermo;

pub use error::{LabError, Result};
pub use phase::{Mat2, PhasePoint, Rect};
