//! Periodic cell problems for the correctors (χ^{ij}, r^{ij}).

mod cache;
mod problem;
mod set;

pub use cache::{cache_key, load_correctors, save_correctors, CellMeta};
pub use problem::{
    check_solvability, grad_sup_norm, load_defect, pair_slot, solvability_defect, solve_cell_problem, unit_strain,
    CellProblem, CellSolveDiagnostics, INDEX_PAIRS, SOLVABILITY_TOL,
};
pub use set::CellCorrectorSet;
