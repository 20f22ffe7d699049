//! Phase-space grids, sampled symbols, Fourier transforms and strip norms.

mod analytic;
mod fourier;
mod grid;
mod strip;
mod symbol;

pub use analytic::{AnalyticSymbol, Gaussian};
pub use fourier::{
    forward_transform, inverse_transform, l2_norm, FourierConvention, FourierSymbol,
};
pub use grid::{PhaseGrid, X, XI};
pub use strip::{
    fourier_norm_bound, fourier_strip_norm, interpolant_strip_norm, strip_norm, StripNorm,
    StripSampling,
};
pub use symbol::{Symbol, DECAY_RATIO, REAL_TOLERANCE};
