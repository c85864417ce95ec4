//! Thin wrappers over faer's sparse factorizations.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::fem::SparseOperator;
use crate::{Error, Result};

fn to_faer(op: &SparseOperator, lower_only: bool) -> Result<SparseColMat<usize, f64>> {
    let trip: Vec<Triplet<usize, usize, f64>> = op
        .triplets()
        .filter(|(r, c, _)| !lower_only || r >= c)
        .map(|(row, col, val)| Triplet { row, col, val })
        .collect();
    SparseColMat::try_new_from_triplets(op.nrows(), op.ncols(), &trip)
        .map_err(|e| Error::SingularSystem(format!("cannot build sparse matrix: {e:?}")))
}

/// Why a factorization could not be produced.
#[derive(Debug)]
pub(crate) enum FactorFailure {
    Singular(String),
    Resources(String),
}

/// Sparse LU with partial pivoting and fill-reducing column ordering.
pub(crate) struct SparseLu {
    lu: Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn new(op: &SparseOperator) -> Result<Self, FactorFailure> {
        faer::set_global_parallelism(faer::Par::Seq);
        let m = to_faer(op, false).map_err(|e| FactorFailure::Resources(e.to_string()))?;
        match m.sp_lu() {
            Ok(lu) => Ok(Self { lu, n: op.nrows() }),
            Err(LuError::SymbolicSingular { index }) => {
                Err(FactorFailure::Singular(format!("structurally singular at pivot {index}")))
            }
            Err(e) => Err(FactorFailure::Resources(format!("{e:?}"))),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Sparse Cholesky of an SPD operator.
pub(crate) struct SparseCholesky {
    llt: Llt<usize, f64>,
    n: usize,
}

impl SparseCholesky {
    pub fn new(op: &SparseOperator) -> Result<Self> {
        faer::set_global_parallelism(faer::Par::Seq);
        let m = to_faer(op, true)?;
        let llt = m.sp_cholesky(Side::Lower).map_err(|e| Error::SingularSystem(format!("Cholesky failed: {e:?}")))?;
        Ok(Self { llt, n: op.nrows() })
    }

    /// Solves for every column of `b` (n × k, column-major).
    pub fn solve_columns(&self, b: &mut Mat<f64>) {
        assert_eq!(b.nrows(), self.n);
        self.llt.solve_in_place(b.as_mut());
    }
}
