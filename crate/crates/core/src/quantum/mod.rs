//! Exact reference dynamics: dense Weyl operators, the propagator, Heisenberg
//! evolution and operator norms.

mod norm;
mod operator;
mod propagator;
mod weyl;

pub use norm::{l1_fourier_norm_bound, operator_norm, operator_norm_with, NormOptions};
pub use operator::{admissible_hbar, matmul, PositionGrid, QuantumOperator};
pub use propagator::{heisenberg_evolve, propagator, PreparedObservable, Propagator};
pub use weyl::{hamiltonian_operator, weyl_quantize, weyl_symbol};
