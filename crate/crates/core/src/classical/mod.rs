//! Hamiltonian models, classical flows with Jacobians, and pullbacks.

mod flow;
mod hamiltonian;
mod integrator;
mod pullback;

pub use flow::{
    complex_trajectory, integrate_flow, integrate_flow_symplectic, integrate_flows, trajectory,
    FlowMap, FlowOptions, IntegratorReport, DEFAULT_TOL,
};
pub use hamiltonian::{
    check_assumptions, estimate_alpha, spectral_norm_2x2, AlphaEstimate, AlphaKind, AlphaSampling,
    AssumptionReport, DeclaredRadii, HamiltonianModel, Potential, CATALOG,
};
pub use integrator::{dopri5, StepStats, Underflow};
pub use pullback::{
    pullback, pullback_analytic, pullback_with, InterpolationConfig, Interpolator, PERIODIC_RATIO,
};
