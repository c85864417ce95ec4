use std::sync::Arc;

use super::problem::{pair_slot, CellProblem, CellSolveDiagnostics, INDEX_PAIRS};
use crate::fem::{FEField, FESpace, MaterialParams};
use crate::geometry::CellMesh;
use crate::saddle::SolveOptions;
use crate::Result;

/// The solved correctors for all index pairs; immutable once built.
#[derive(Debug, Clone)]
pub struct CellCorrectorSet {
    pub params: MaterialParams,
    pub cell: Arc<CellMesh>,
    /// Requested mesh size of the cell mesh.
    pub h: f64,
    pub u_space: Arc<FESpace>,
    pub p_space: Arc<FESpace>,
    chi: [FEField; 3],
    r: [FEField; 3],
    pub diagnostics: Vec<CellSolveDiagnostics>,
    pub inf_sup: Option<f64>,
}

impl CellCorrectorSet {
    /// Solves the three cell problems with one factorization.
    pub fn solve(cell: Arc<CellMesh>, params: MaterialParams, h: f64, with_inf_sup: bool) -> Result<Self> {
        Self::solve_with_options(cell, params, h, with_inf_sup, &SolveOptions::default())
    }

    pub fn solve_with_options(
        cell: Arc<CellMesh>,
        params: MaterialParams,
        h: f64,
        with_inf_sup: bool,
        opts: &SolveOptions,
    ) -> Result<Self> {
        let prob = CellProblem::new(cell.clone(), params)?;
        let f = prob.factor(opts)?;
        let mut chi = Vec::new();
        let mut r = Vec::new();
        let mut diagnostics = Vec::new();
        for (i, j) in INDEX_PAIRS {
            let (c, p, d) = prob.solve_with(&f, i, j)?;
            log::debug!("cell ({i},{j}): residual {:.2e}, defect {:.2e}", d.residual, d.solvability_defect);
            chi.push(c);
            r.push(p);
            diagnostics.push(d);
        }
        let inf_sup = if with_inf_sup { Some(prob.inf_sup()?) } else { None };
        Ok(Self {
            params,
            cell,
            h,
            u_space: prob.u_space.clone(),
            p_space: prob.p_space.clone(),
            chi: to_array(chi),
            r: to_array(r),
            diagnostics,
            inf_sup,
        })
    }

    /// A set with prescribed fields, ordered as [`INDEX_PAIRS`].
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        cell: Arc<CellMesh>,
        params: MaterialParams,
        h: f64,
        chi: [FEField; 3],
        r: [FEField; 3],
        diagnostics: Vec<CellSolveDiagnostics>,
        inf_sup: Option<f64>,
    ) -> Self {
        let u_space = chi[0].space.clone();
        let p_space = r[0].space.clone();
        Self { params, cell, h, u_space, p_space, chi, r, diagnostics, inf_sup }
    }

    /// Identically zero correctors on the cell mesh.
    pub fn zero(cell: Arc<CellMesh>, params: MaterialParams) -> Self {
        let u = Arc::new(FESpace::vector_p2_periodic(&cell));
        let p = Arc::new(FESpace::pressure_p1(cell.mesh.clone()));
        let h = cell.mesh.h;
        let chi = [(); 3].map(|_| FEField::zeros(u.clone()));
        let r = [(); 3].map(|_| FEField::zeros(p.clone()));
        Self::from_parts(cell, params, h, chi, r, Vec::new(), None)
    }

    /// χ^{ij}; (1,0) and (0,1) share storage.
    pub fn chi(&self, i: usize, j: usize) -> &FEField {
        &self.chi[pair_slot(i, j)]
    }

    pub fn r(&self, i: usize, j: usize) -> &FEField {
        &self.r[pair_slot(i, j)]
    }

    pub fn chi_fields(&self) -> &[FEField; 3] {
        &self.chi
    }

    pub fn r_fields(&self) -> &[FEField; 3] {
        &self.r
    }
}

fn to_array(v: Vec<FEField>) -> [FEField; 3] {
    v.try_into().unwrap_or_else(|_| unreachable!("three index pairs"))
}
