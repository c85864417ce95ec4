use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::assemble::assemble_mass;
use super::space::{FEField, FESpace, Family};
use super::sparse::SparseOperator;
use crate::{Error, Result};

/// Interpolants of the rigid motions (1,0), (0,1), (−y, x).
pub fn rigid_motion_basis(space: &Arc<FESpace>) -> Result<[FEField; 3]> {
    if space.family != Family::VectorP2 || space.is_periodic() {
        return Err(Error::Unsupported("rigid motions need an unconstrained displacement space".into()));
    }
    Ok([
        space.interpolate(|_| vec![1.0, 0.0]),
        space.interpolate(|_| vec![0.0, 1.0]),
        space.interpolate(|x| vec![-x[1], x[0]]),
    ])
}

/// Dense multiplier rows `C`, imposing `C u = 0`.
#[derive(Debug, Clone, Default)]
pub struct ConstraintRows {
    pub rows: Vec<Vec<f64>>,
}

impl ConstraintRows {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().zip(u).map(|(a, b)| a * b).sum()).collect()
    }

    /// Gram matrix C Cᵀ.
    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.rows.len();
        DMatrix::from_fn(m, m, |i, j| self.rows[i].iter().zip(&self.rows[j]).map(|(a, b)| a * b).sum())
    }

    /// Fails with `RankDeficiency` when the rows are (numerically) dependent.
    pub fn check_rank(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Ok(());
        }
        let g = self.gram();
        let eig = g.symmetric_eigenvalues();
        let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        if !(max > 0.0) || min <= 1e-12 * max {
            return Err(Error::RankDeficiency(format!(
                "{} constraint rows, Gram eigenvalue ratio {:.3e}",
                self.rows.len(),
                if max > 0.0 { min / max } else { 0.0 }
            )));
        }
        Ok(())
    }
}

/// The augmented operator [[A, Cᵀ], [C, 0]].
pub fn constrain(op: &SparseOperator, c: &ConstraintRows) -> Result<SparseOperator> {
    c.check_rank()?;
    let n = op.nrows();
    let m = c.len();
    let mut trip: Vec<(usize, usize, f64)> = op.triplets().collect();
    for (k, row) in c.rows.iter().enumerate() {
        assert_eq!(row.len(), op.ncols(), "constraint row length");
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                trip.push((n + k, j, v));
                trip.push((j, n + k, v));
            }
        }
    }
    Ok(SparseOperator::from_triplets(n + m, n + m, trip, op.symmetric))
}

/// Subtracts the componentwise mean, the L²-orthogonal projection onto zero-mean fields.
pub fn project_zero_mean(f: &FEField) -> FEField {
    let space = &f.space;
    let nc = space.family.components();
    let mesh = &space.mesh;
    let area = mesh.total_area();
    let mut out = f.clone();
    for c in 0..nc {
        let mean = super::assemble::integrate(space, |t, g, l, _| f.eval(t, g, l).0[c]) / area;
        for n in 0..space.n_nodes() {
            out.coeffs[n * nc + c] -= mean;
        }
    }
    out
}

/// Coefficients of the L²-projection of `f` onto the rigid motions.
pub fn rigid_coefficients(f: &FEField) -> Result<[f64; 3]> {
    let basis = rigid_motion_basis(&f.space)?;
    let mass = assemble_mass(&f.space);
    let mb: Vec<Vec<f64>> = basis.iter().map(|b| mass.matvec(&b.coeffs)).collect();
    let g = DMatrix::from_fn(3, 3, |i, j| dot(&mb[i], &basis[j].coeffs));
    let r = DVector::from_fn(3, |i, _| dot(&mb[i], &f.coeffs));
    let x = g.lu().solve(&r).ok_or_else(|| Error::SingularSystem("rigid-motion Gram matrix is singular".into()))?;
    Ok([x[0], x[1], x[2]])
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
