//! Numerical laboratory for the semiclassical propagation of Weyl observables.
//!
//! Symbols live on a phase-space grid ([`phase_space`]); classical flows pull
//! them back ([`classical`]); the Moyal calculus supplies the defect operator
//! ([`moyal`]); [`expansion`] builds the ℏ² corrections; [`quantum`] provides the
//! exact reference dynamics and [`bounds`] evaluates the explicit estimates.

pub mod bounds;
pub mod classical;
pub mod error;
pub mod expansion;
pub mod experiment;
pub mod fit;
pub mod io;
pub mod moyal;
pub mod phase_space;
pub mod quantum;
pub mod spectral;

pub use error::{Error, Result};
