use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::direct::{FactorFailure, SparseLu};
use super::minres::minres;
use crate::fem::{ConstraintRows, SparseOperator};
use crate::{Error, Result};

/// The block system
///
/// ```text
/// [ A  Bᵀ Cᵀ ] [u]   [f_u]
/// [ B  0  0  ] [p] = [f_p]
/// [ C  0  0  ] [m]   [f_c]
/// ```
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a: SparseOperator,
    /// Pressure coupling, rows indexing pressures; `None` without pressure.
    pub b: Option<SparseOperator>,
    pub c: ConstraintRows,
    pub rhs_u: Vec<f64>,
    pub rhs_p: Vec<f64>,
    pub rhs_c: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Direct,
    Minres,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub method: SolveMethod,
    /// ‖Kz − f‖ / (1 + ‖f‖).
    pub residual: f64,
    /// ‖z‖ / ‖f‖ (0 for zero data).
    pub stability_ratio: f64,
    pub unknowns: usize,
    pub refinement_steps: usize,
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Skip the direct factorization.
    pub force_iterative: bool,
    /// Initial guess for the iterative path (full augmented vector).
    pub initial_guess: Option<Vec<f64>>,
    /// Write the augmented matrix in MatrixMarket form before solving.
    pub dump_matrix: Option<PathBuf>,
}

/// Residual contract of every accepted solve.
pub const RESIDUAL_TOL: f64 = 1e-9;

impl SaddleSystem {
    pub fn n_u(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_p(&self) -> usize {
        self.b.as_ref().map_or(0, |b| b.nrows())
    }

    pub fn n_c(&self) -> usize {
        self.c.len()
    }

    fn check_dims(&self) -> Result<()> {
        let n = self.n_u();
        let bad = |m: String| Err(Error::SingularSystem(format!("inconsistent block dimensions: {m}")));
        if self.a.ncols() != n || self.rhs_u.len() != n {
            return bad(format!("A is {}x{}, rhs_u has {}", n, self.a.ncols(), self.rhs_u.len()));
        }
        if let Some(b) = &self.b {
            if b.ncols() != n || self.rhs_p.len() != b.nrows() {
                return bad(format!("B is {}x{}, rhs_p has {}", b.nrows(), b.ncols(), self.rhs_p.len()));
            }
        } else if !self.rhs_p.is_empty() {
            return bad("pressure rhs without B".into());
        }
        if self.rhs_c.len() != self.c.len() || self.c.rows.iter().any(|r| r.len() != n) {
            return bad("constraint rows".into());
        }
        Ok(())
    }

    /// The full augmented matrix K.
    pub fn augmented(&self) -> SparseOperator {
        let (n, np, nc) = (self.n_u(), self.n_p(), self.n_c());
        let mut trip: Vec<(usize, usize, f64)> = self.a.triplets().collect();
        if let Some(b) = &self.b {
            for (r, c, v) in b.triplets() {
                trip.push((n + r, c, v));
                trip.push((c, n + r, v));
            }
        }
        for (k, row) in self.c.rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trip.push((n + np + k, j, v));
                    trip.push((j, n + np + k, v));
                }
            }
        }
        let dim = n + np + nc;
        SparseOperator::from_triplets(dim, dim, trip, self.a.symmetric)
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut f = self.rhs_u.clone();
        f.extend_from_slice(&self.rhs_p);
        f.extend_from_slice(&self.rhs_c);
        f
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn residual(k: &SparseOperator, z: &[f64], f: &[f64]) -> f64 {
    let kz = k.matvec(z);
    norm(&kz.iter().zip(f).map(|(a, b)| a - b).collect::<Vec<_>>())
}

/// Deterministic probe vector with entries in [0.5, 1.5).
fn probe(n: usize) -> Vec<f64> {
    let mut s: u64 = 0x9E37_79B9_7F4A_7C15;
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            0.5 + (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

pub fn solve(sys: &SaddleSystem) -> Result<SaddleSolution> {
    solve_with(sys, &SolveOptions::default())
}

pub fn solve_with(sys: &SaddleSystem, opts: &SolveOptions) -> Result<SaddleSolution> {
    FactoredSaddle::new(sys, opts)?.solve(&sys.rhs_u, &sys.rhs_p, &sys.rhs_c)
}

/// Rows touching more entries than this (relative to √dim) defeat the
/// fill-reducing ordering and are handled by bordering instead.
const DENSE_ROW_FACTOR: f64 = 10.0;

fn has_dense_rows(c: &ConstraintRows, dim: usize) -> bool {
    let limit = (DENSE_ROW_FACTOR * (dim as f64).sqrt()).max(64.0);
    c.rows.iter().any(|r| r.iter().filter(|v| **v != 0.0).count() as f64 > limit)
}

/// LU of the augmented matrix. With dense constraint rows, the factored
/// matrix carries unit pin rows in their place and the true rows are
/// restored by a rank-2m Woodbury correction.
enum Factorization {
    Plain(SparseLu),
    Bordered {
        lu: SparseLu,
        /// Columns of K_pin⁻¹ U.
        w: Vec<Vec<f64>>,
        capacitance: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
        /// C − E on the displacement–pressure block.
        d: Vec<Vec<f64>>,
        core: usize,
    },
}

impl Factorization {
    fn bordered(sys: &SaddleSystem) -> Result<Self, FactorFailure> {
        let (n, np, m) = (sys.n_u(), sys.n_p(), sys.n_c());
        let core = n + np;
        let mut pins: Vec<usize> = Vec::with_capacity(m);
        for row in &sys.c.rows {
            let j = (0..n)
                .filter(|j| !pins.contains(j))
                .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()).then(b.cmp(&a)))
                .ok_or_else(|| FactorFailure::Singular("no pivot for a constraint row".into()))?;
            pins.push(j);
        }
        let pinned = SaddleSystem {
            c: ConstraintRows::new(
                pins.iter()
                    .map(|&j| {
                        let mut r = vec![0.0; n];
                        r[j] = 1.0;
                        r
                    })
                    .collect(),
            ),
            ..sys.clone()
        };
        let lu = SparseLu::new(&pinned.augmented())?;
        let d: Vec<Vec<f64>> = sys
            .c
            .rows
            .iter()
            .zip(&pins)
            .map(|(row, &j)| {
                let mut r = row.clone();
                r[j] -= 1.0;
                r.resize(core, 0.0);
                r
            })
            .collect();
        let mut w = Vec::with_capacity(2 * m);
        for dk in &d {
            let mut col = dk.clone();
            col.resize(core + m, 0.0);
            w.push(lu.solve(&col));
        }
        for k in 0..m {
            let mut col = vec![0.0; core + m];
            col[core + k] = 1.0;
            w.push(lu.solve(&col));
        }
        let vw = |y: &[f64]| -> Vec<f64> {
            let mut t: Vec<f64> = y[core..].to_vec();
            t.extend(d.iter().map(|dk| dk.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()));
            t
        };
        let mut cap = nalgebra::DMatrix::<f64>::identity(2 * m, 2 * m);
        for (c, wc) in w.iter().enumerate() {
            for (r, v) in vw(wc).into_iter().enumerate() {
                cap[(r, c)] += v;
            }
        }
        Ok(Factorization::Bordered { lu, w, capacitance: cap.lu(), d, core })
    }

    fn solve(&self, f: &[f64]) -> Vec<f64> {
        match self {
            Factorization::Plain(lu) => lu.solve(f),
            Factorization::Bordered { lu, w, capacitance, d, core } => {
                let mut y = lu.solve(f);
                let mut t: Vec<f64> = y[*core..].to_vec();
                t.extend(d.iter().map(|dk| dk.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()));
                let s = capacitance
                    .solve(&nalgebra::DVector::from_vec(t))
                    .unwrap_or_else(|| nalgebra::DVector::from_element(w.len(), f64::NAN));
                for (wc, sc) in w.iter().zip(s.iter()) {
                    for (yi, wi) in y.iter_mut().zip(wc) {
                        *yi -= sc * wi;
                    }
                }
                y
            }
        }
    }
}

/// A checked factorization of the augmented matrix, reusable across
/// right-hand sides.
pub struct FactoredSaddle {
    k: SparseOperator,
    lu: Option<Factorization>,
    dims: (usize, usize, usize),
    initial_guess: Option<Vec<f64>>,
}

impl FactoredSaddle {
    pub fn new(sys: &SaddleSystem, opts: &SolveOptions) -> Result<Self> {
        sys.check_dims()?;
        if sys.a.nrows() == 0 {
            return Err(Error::SingularSystem("empty system".into()));
        }
        if let Err(e) = sys.c.check_rank() {
            return Err(Error::SingularSystem(format!("constraint misconfiguration: {e}")));
        }
        let k = sys.augmented();
        if let Some(path) = &opts.dump_matrix {
            write_matrix_market(&k, std::fs::File::create(path)?)?;
        }
        let dim = k.nrows();
        let lu = if opts.force_iterative {
            None
        } else {
            // Singularity probe: a factorization must recover a known solution.
            let probe_error = |f: &Factorization| {
                let z0 = probe(dim);
                let zp = f.solve(&k.matvec(&z0));
                norm(&zp.iter().zip(&z0).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(&z0)
            };
            let bordered = if has_dense_rows(&sys.c, dim) {
                match Factorization::bordered(sys) {
                    Ok(f) if probe_error(&f) <= 1e-6 => Some(f),
                    _ => {
                        log::debug!("bordered factorization rejected; factoring the dense rows directly");
                        None
                    }
                }
            } else {
                None
            };
            match bordered.map(Ok).unwrap_or_else(|| SparseLu::new(&k).map(Factorization::Plain)) {
                Ok(lu) => {
                    let err = probe_error(&lu);
                    if !err.is_finite() || err > 1e-6 {
                        return Err(Error::SingularSystem(format!(
                            "factorization cannot reproduce a probe solution (relative error {err:.3e})"
                        )));
                    }
                    Some(lu)
                }
                Err(FactorFailure::Singular(m)) => return Err(Error::SingularSystem(m)),
                Err(FactorFailure::Resources(m)) => {
                    log::warn!("direct factorization unavailable ({m}); falling back to MINRES");
                    None
                }
            }
        };
        Ok(Self { k, lu, dims: (sys.n_u(), sys.n_p(), sys.n_c()), initial_guess: opts.initial_guess.clone() })
    }

    pub fn augmented(&self) -> &SparseOperator {
        &self.k
    }

    pub fn solve(&self, rhs_u: &[f64], rhs_p: &[f64], rhs_c: &[f64]) -> Result<SaddleSolution> {
        let (n, np, nc) = self.dims;
        if rhs_u.len() != n || rhs_p.len() != np || rhs_c.len() != nc {
            return Err(Error::SingularSystem("right-hand side does not match the factored system".into()));
        }
        let f: Vec<f64> = rhs_u.iter().chain(rhs_p).chain(rhs_c).copied().collect();
        let fnorm = norm(&f);
        let dim = f.len();
        let k = &self.k;
        let (z, method, steps) = match &self.lu {
            Some(lu) => {
                let mut z = lu.solve(&f);
                let mut steps = 0;
                for _ in 0..2 {
                    let kz = k.matvec(&z);
                    let r: Vec<f64> = f.iter().zip(&kz).map(|(a, b)| a - b).collect();
                    if norm(&r) <= 1e-14 * (1.0 + fnorm) {
                        break;
                    }
                    let dz = lu.solve(&r);
                    for (zi, d) in z.iter_mut().zip(dz) {
                        *zi += d;
                    }
                    steps += 1;
                }
                (z, SolveMethod::Direct, steps)
            }
            None => {
                let z = minres(k, &f, self.initial_guess.as_deref(), 1e-12, 50 * dim.max(100))?;
                (z, SolveMethod::Minres, 0)
            }
        };
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("non-finite solution".into()));
        }
        let res = residual(k, &z, &f) / (1.0 + fnorm);
        if res > RESIDUAL_TOL {
            return Err(match method {
                SolveMethod::Direct => Error::SingularSystem(format!("residual {res:.3e} after refinement")),
                SolveMethod::Minres => Error::NonConvergence(format!("residual {res:.3e}")),
            });
        }
        let stability_ratio = if fnorm > 0.0 { norm(&z) / fnorm } else { 0.0 };
        Ok(SaddleSolution {
            u: z[..n].to_vec(),
            p: z[n..n + np].to_vec(),
            multipliers: z[n + np..].to_vec(),
            diagnostics: SolveDiagnostics {
                method,
                residual: res,
                stability_ratio,
                unknowns: dim,
                refinement_steps: steps,
            },
        })
    }
}

/// `%%MatrixMarket matrix coordinate real general`, 1-based indices.
pub fn write_matrix_market<W: Write>(k: &SparseOperator, w: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", k.nrows(), k.ncols(), k.nnz())?;
    for (r, c, v) in k.triplets() {
        writeln!(w, "{} {} {:.16e}", r + 1, c + 1, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(k: &SparseOperator, f: &[f64]) -> Vec<f64> {
        let m = k.to_dense();
        let x = m.lu().solve(&nalgebra::DVector::from_column_slice(f)).unwrap();
        x.iter().copied().collect()
    }

    #[test]
    fn dense_constraint_rows_are_bordered() {
        // ring Laplacian (kernel = constants) with a dense zero-mean row
        let n = 400;
        let mut trip = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            trip.extend([(i, i, 1.0), (j, j, 1.0), (i, j, -1.0), (j, i, -1.0)]);
        }
        let weights: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i * 7) % 5) as f64).collect();
        let rhs_u: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.37).sin()).collect();
        let mean = rhs_u.iter().sum::<f64>() / n as f64;
        let sys = SaddleSystem {
            a: SparseOperator::from_triplets(n, n, trip, true),
            b: None,
            c: ConstraintRows::new(vec![weights]),
            rhs_u: rhs_u.iter().map(|v| v - mean).collect(),
            rhs_p: vec![],
            rhs_c: vec![0.3],
        };
        assert!(has_dense_rows(&sys.c, n + 1));
        let f = FactoredSaddle::new(&sys, &SolveOptions::default()).unwrap();
        assert!(matches!(f.lu, Some(Factorization::Bordered { .. })));
        let s = f.solve(&sys.rhs_u, &sys.rhs_p, &sys.rhs_c).unwrap();
        let z = dense_solve(&sys.augmented(), &sys.rhs());
        let err = s.u.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9 * z.iter().fold(0.0f64, |m, v| m.max(v.abs())), "{err}");
        assert!((s.multipliers[0] - z[n]).abs() < 1e-9);
    }

    #[test]
    fn identity_block_without_pressure() {
        let sys = SaddleSystem {
            a: SparseOperator::identity(4),
            b: None,
            c: ConstraintRows::default(),
            rhs_u: vec![1.0, 0.0, 0.0, 0.0],
            rhs_p: vec![],
            rhs_c: vec![],
        };
        let s = solve(&sys).unwrap();
        assert_eq!(s.u, vec![1.0, 0.0, 0.0, 0.0]);
        assert!(s.p.is_empty());
    }

    #[test]
    fn two_by_two_saddle() {
        // [[2, 1], [1, 0]] z = (3, 1) → z = (1, 1)
        let sys = SaddleSystem {
            a: SparseOperator::from_triplets(1, 1, vec![(0, 0, 2.0)], true),
            b: Some(SparseOperator::from_triplets(1, 1, vec![(0, 0, 1.0)], false)),
            c: ConstraintRows::default(),
            rhs_u: vec![3.0],
            rhs_p: vec![1.0],
            rhs_c: vec![],
        };
        let s = solve(&sys).unwrap();
        assert!((s.u[0] - 1.0).abs() < 1e-15 && (s.p[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dependent_constraints_are_singular() {
        let sys = SaddleSystem {
            a: SparseOperator::identity(3),
            b: None,
            c: ConstraintRows::new(vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]),
            rhs_u: vec![1.0; 3],
            rhs_p: vec![],
            rhs_c: vec![0.0, 0.0],
        };
        assert!(matches!(solve(&sys), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn singular_block_detected_by_probe() {
        // A has a kernel not removed by any constraint.
        let a = SparseOperator::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 0.0)], true);
        let sys = SaddleSystem {
            a,
            b: None,
            c: ConstraintRows::default(),
            rhs_u: vec![1.0; 3],
            rhs_p: vec![],
            rhs_c: vec![],
        };
        assert!(matches!(solve(&sys), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn sparse_matches_dense_oracle_and_iterative_path() {
        // random small SPD A + full-rank B and one constraint row
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 4.0 + rng.gen::<f64>()));
            if i + 1 < n {
                let v = rng.gen_range(-1.0..1.0);
                trip.push((i, i + 1, v));
                trip.push((i + 1, i, v));
            }
        }
        let a = SparseOperator::from_triplets(n, n, trip, true);
        let b = SparseOperator::from_triplets(
            5,
            n,
            (0..5).flat_map(|r| [(r, 3 * r, 1.0), (r, 3 * r + 1, -0.5)]).collect(),
            false,
        );
        let c = ConstraintRows::new(vec![(0..n).map(|i| 1.0 + (i % 3) as f64).collect()]);
        let sys = SaddleSystem {
            a,
            b: Some(b),
            c,
            rhs_u: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            rhs_p: (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            rhs_c: vec![0.3],
        };
        let s = solve(&sys).unwrap();
        let z: Vec<f64> = s.u.iter().chain(&s.p).chain(&s.multipliers).copied().collect();
        let zd = dense_solve(&sys.augmented(), &sys.rhs());
        let err = norm(&z.iter().zip(&zd).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(&zd);
        assert!(err < 1e-10);
        // iterative path from two different starts
        let it1 = solve_with(&sys, &SolveOptions { force_iterative: true, ..Default::default() }).unwrap();
        let it2 = solve_with(
            &sys,
            &SolveOptions { force_iterative: true, initial_guess: Some(vec![1.0; z.len()]), ..Default::default() },
        )
        .unwrap();
        let du = norm(&it1.u.iter().zip(&it2.u).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(&it1.u);
        assert!(du < 1e-8);
        assert_eq!(it1.diagnostics.method, SolveMethod::Minres);
    }

    #[test]
    fn matrix_market_header() {
        let mut buf = Vec::new();
        write_matrix_market(&SparseOperator::identity(2), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 "));
    }
}
