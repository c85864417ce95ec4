use faer::Mat;
use nalgebra::DMatrix;

use super::direct::SparseCholesky;
use crate::fem::SparseOperator;
use crate::{Error, Result};

/// Largest pressure space handled by the dense Schur eigenproblem.
pub const INF_SUP_MAX_PRESSURE_DOFS: usize = 5000;

const CHUNK: usize = 64;

/// Discrete inf-sup constant
///
/// β = inf_q sup_v (Bv, q) / (‖v‖_U ‖q‖_P),
///
/// computed as the square root of the smallest eigenvalue of
/// `B G⁻¹ Bᵀ x = β² M x`, where `G` is the Gram matrix of the velocity norm
/// and `M` that of the pressure norm.
pub fn estimate_inf_sup(b: &SparseOperator, gram_u: &SparseOperator, mass_p: &SparseOperator) -> Result<f64> {
    let (np, nu) = (b.nrows(), b.ncols());
    if gram_u.nrows() != nu || mass_p.nrows() != np {
        return Err(Error::IncompatibleData("inf-sup operands have mismatched sizes".into()));
    }
    if np == 0 || b.max_abs() == 0.0 {
        return Ok(0.0);
    }
    if np > INF_SUP_MAX_PRESSURE_DOFS {
        return Err(Error::Unsupported(format!(
            "{np} pressure unknowns exceed the dense inf-sup limit of {INF_SUP_MAX_PRESSURE_DOFS}"
        )));
    }
    let g = SparseCholesky::new(gram_u)?;
    let rows: Vec<Vec<(usize, f64)>> = (0..np).map(|r| b.row(r).collect()).collect();
    let mut s = DMatrix::<f64>::zeros(np, np);
    for start in (0..np).step_by(CHUNK) {
        let end = (start + CHUNK).min(np);
        let mut x = Mat::<f64>::zeros(nu, end - start);
        for (j, r) in (start..end).enumerate() {
            for &(c, v) in &rows[r] {
                x[(c, j)] = v;
            }
        }
        g.solve_columns(&mut x);
        for (i, row) in rows.iter().enumerate() {
            for j in 0..end - start {
                s[(i, start + j)] = row.iter().map(|&(c, v)| v * x[(c, j)]).sum();
            }
        }
    }
    let s = (&s + s.transpose()) * 0.5;
    let chol = mass_p
        .to_dense()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("pressure Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ S L⁻ᵀ
    let y =
        l.solve_lower_triangular(&s).ok_or_else(|| Error::SingularSystem("pressure Gram factor is singular".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::SingularSystem("pressure Gram factor is singular".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let min = c.symmetric_eigenvalues().min();
    Ok(min.max(0.0).sqrt())
}
