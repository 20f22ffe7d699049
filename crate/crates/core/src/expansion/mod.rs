//! The ℏ² expansion of the Heisenberg observable: remainder symbols `r_k`,
//! nested time integrals `b_j^t`, and partial sums.
//!
//! Times are parametrized by segment durations `s_1, ..., s_j` on the simplex
//! `s_1 + ... + s_j <= t`; the last segment `t - sum s` carries the final pullback.

mod engine;
mod quadrature;

pub use engine::{
    approximant_from_terms, assemble_approximant, combine_terms, expansion_term, remainder_r,
    Approximant, EngineOptions, EngineStats, ExpansionEngine, ExpansionTerm, QuadratureControl,
    QuadratureReport, RemainderSymbol, SummationConvention, TIME_QUANTUM,
};
pub use quadrature::{gauss_legendre, next_rung, simplex_integral, simplex_volume, NODE_LADDER};
