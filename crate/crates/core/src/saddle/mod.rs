//! Augmented saddle-point systems: direct sparse solve with an iterative
//! fallback, and the discrete inf-sup estimate.

mod direct;
mod infsup;
mod minres;
mod system;

pub(crate) use direct::SparseCholesky;
pub use infsup::{estimate_inf_sup, INF_SUP_MAX_PRESSURE_DOFS};
pub use minres::minres;
pub use system::{
    solve, solve_with, write_matrix_market, FactoredSaddle, SaddleSolution, SaddleSystem, SolveDiagnostics,
    SolveMethod, SolveOptions, RESIDUAL_TOL,
};
