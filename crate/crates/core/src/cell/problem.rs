use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fem::{
    assemble_a, assemble_b, assemble_h1_gram, assemble_mass, assemble_scalar_load, assemble_stress_load, integrate,
    mean_rows, rigid_motion_basis, ConstraintRows, FEField, FESpace, MaterialParams, SparseOperator,
};
use crate::geometry::{CellMesh, Phase};
use crate::saddle::{estimate_inf_sup, FactoredSaddle, SaddleSystem, SolveMethod, SolveOptions};
use crate::{Error, Result};

/// The three independent index pairs; (1,0) aliases (0,1).
pub const INDEX_PAIRS: [(usize, usize); 3] = [(0, 0), (0, 1), (1, 1)];

/// Relative threshold on the compatibility defect.
pub const SOLVABILITY_TOL: f64 = 1e-10;

/// E^{ij} = ½(e_i⊗e_j + e_j⊗e_i), 0-based indices.
pub fn unit_strain(i: usize, j: usize) -> [[f64; 2]; 2] {
    assert!(i < 2 && j < 2, "strain index out of range");
    let mut e = [[0.0; 2]; 2];
    e[i][j] += 0.5;
    e[j][i] += 0.5;
    e
}

/// Position of (i, j) in [`INDEX_PAIRS`].
pub fn pair_slot(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 1) => 2,
        _ => panic!("strain index ({i}, {j}) out of range"),
    }
}

fn delta(i: usize, j: usize) -> f64 {
    (i == j) as u8 as f64
}

/// Stress of the unit strain on each phase: λδ_ij I + 2μE in the matrix, 2μ̃E in the inclusion.
fn unit_stress(params: &MaterialParams, i: usize, j: usize, phase: Phase) -> [[f64; 2]; 2] {
    let e = unit_strain(i, j);
    let (lam, mu) = params.lame(phase);
    let mut s = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            s[a][b] = 2.0 * mu * e[a][b] + lam * delta(i, j) * delta(a, b);
        }
    }
    s
}

/// Per-solve record kept with the corrector set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSolveDiagnostics {
    pub i: usize,
    pub j: usize,
    pub method: SolveMethod,
    pub residual: f64,
    pub stability_ratio: f64,
    pub solvability_defect: f64,
    pub solvability_scale: f64,
    /// ∫_Y χ componentwise.
    pub chi_mean: [f64; 2],
    /// ∫_ω div χ.
    pub inclusion_divergence: f64,
}

/// Assembled operators of the cell problem, shared by all index pairs.
pub struct CellProblem {
    pub cell: Arc<CellMesh>,
    pub params: MaterialParams,
    pub u_space: Arc<FESpace>,
    pub p_space: Arc<FESpace>,
    pub a: SparseOperator,
    pub b: SparseOperator,
    pub mean: ConstraintRows,
}

impl CellProblem {
    pub fn new(cell: Arc<CellMesh>, params: MaterialParams) -> Result<Self> {
        params.validate()?;
        let u_space = Arc::new(FESpace::vector_p2_periodic(&cell));
        let p_space = Arc::new(FESpace::pressure_p1(cell.mesh.clone()));
        let a = assemble_a(&u_space, &params);
        let b = assemble_b(&u_space, &p_space);
        let mean = ConstraintRows::new(mean_rows(&u_space));
        Ok(Self { cell, params, u_space, p_space, a, b, mean })
    }

    /// Right-hand sides (f_u, f_p) of the (i, j) cell problem.
    pub fn rhs(&self, i: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
        let fu = assemble_stress_load(&self.u_space, |ph| unit_stress(&self.params, i, j, ph));
        let fu = fu.into_iter().map(|v| -v).collect();
        let fp = assemble_scalar_load(&self.p_space, -delta(i, j));
        (fu, fp)
    }

    pub fn system(&self, i: usize, j: usize) -> SaddleSystem {
        let (rhs_u, rhs_p) = self.rhs(i, j);
        SaddleSystem {
            a: self.a.clone(),
            b: if self.p_space.dof_count() > 0 { Some(self.b.clone()) } else { None },
            c: self.mean.clone(),
            rhs_u,
            rhs_p: if self.p_space.dof_count() > 0 { rhs_p } else { Vec::new() },
            rhs_c: vec![0.0; 2],
        }
    }

    pub fn factor(&self, opts: &SolveOptions) -> Result<FactoredSaddle> {
        FactoredSaddle::new(&self.system(0, 0), opts)
    }

    /// Solves the (i, j) problem with an existing factorization.
    pub fn solve_with(
        &self,
        f: &FactoredSaddle,
        i: usize,
        j: usize,
    ) -> Result<(FEField, FEField, CellSolveDiagnostics)> {
        let (defect, scale) = solvability_defect(&self.cell, &self.params, i, j)?;
        if defect > SOLVABILITY_TOL * scale {
            return Err(Error::SolvabilityViolation { defect, threshold: SOLVABILITY_TOL * scale });
        }
        let sys = self.system(i, j);
        let sol = f.solve(&sys.rhs_u, &sys.rhs_p, &sys.rhs_c)?;
        let chi = FEField::new(self.u_space.clone(), sol.u);
        let r = FEField::new(self.p_space.clone(), sol.p);
        let chi_mean = [0, 1].map(|c| integrate(&self.u_space, |t, g, l, _| chi.eval(t, g, l).0[c]));
        let inclusion_divergence = integrate(&self.u_space, |t, g, l, _| {
            if self.cell.mesh.phase[t] == Phase::Fluid {
                let (_, d) = chi.eval_vector(t, g, l);
                d[0][0] + d[1][1]
            } else {
                0.0
            }
        });
        let diag = CellSolveDiagnostics {
            i,
            j,
            method: sol.diagnostics.method,
            residual: sol.diagnostics.residual,
            stability_ratio: sol.diagnostics.stability_ratio,
            solvability_defect: defect,
            solvability_scale: scale,
            chi_mean,
            inclusion_divergence,
        };
        Ok((chi, r, diag))
    }

    /// Discrete inf-sup constant of the periodic Taylor–Hood pair (H¹ × L²).
    pub fn inf_sup(&self) -> Result<f64> {
        estimate_inf_sup(&self.b, &assemble_h1_gram(&self.u_space), &assemble_mass(&self.p_space))
    }
}

/// Solves the (i, j) cell problem: periodic zero-mean χ and inclusion pressure r.
pub fn solve_cell_problem(
    cell: &Arc<CellMesh>,
    params: &MaterialParams,
    i: usize,
    j: usize,
) -> Result<(FEField, FEField)> {
    let prob = CellProblem::new(cell.clone(), *params)?;
    let f = prob.factor(&SolveOptions::default())?;
    let (chi, r, _) = prob.solve_with(&f, i, j)?;
    Ok((chi, r))
}

/// Compatibility defect of a displacement load against the interpolated rigid
/// motions on the non-periodic P2 space: (Σ_k |L(r_k)|, scale(L)).
pub fn load_defect(space: &Arc<FESpace>, load: &[f64]) -> Result<(f64, f64)> {
    let rigid = rigid_motion_basis(space)?;
    let defect = rigid.iter().map(|r| r.coeffs.iter().zip(load).map(|(a, b)| a * b).sum::<f64>().abs()).sum();
    let norms: Vec<f64> = rigid.iter().map(|r| r.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()).collect();
    let lnorm = load.iter().map(|c| c * c).sum::<f64>().sqrt();
    let scale = lnorm * norms.iter().sum::<f64>();
    Ok((defect, scale.max(f64::MIN_POSITIVE)))
}

/// Returns (defect, scale) for the (i, j) load; the caller compares against
/// `SOLVABILITY_TOL · scale`.
pub fn solvability_defect(cell: &CellMesh, params: &MaterialParams, i: usize, j: usize) -> Result<(f64, f64)> {
    let space = Arc::new(FESpace::vector_p2(cell.mesh.clone()));
    let load = assemble_stress_load(&space, |ph| unit_stress(params, i, j, ph));
    load_defect(&space, &load)
}

/// Compatibility defect of the (i, j) cell load.
pub fn check_solvability(cell: &CellMesh, params: &MaterialParams, i: usize, j: usize) -> Result<f64> {
    Ok(solvability_defect(cell, params, i, j)?.0)
}

/// max |∇χ| (Frobenius) over quadrature points.
pub fn grad_sup_norm(chi: &FEField) -> f64 {
    crate::fem::grad_at_quadpoints(chi)
        .into_iter()
        .map(|(g, _)| (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2)).sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{h1_seminorm, l2_norm};
    use crate::geometry::{build_unit_cell_mesh, InclusionShape};
    use std::f64::consts::PI;

    fn unit() -> MaterialParams {
        MaterialParams::new(1.0, 1.0, 1.0).unwrap()
    }

    fn cell(h: f64) -> Arc<CellMesh> {
        Arc::new(build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), h).unwrap())
    }

    #[test]
    fn strain_and_slots() {
        assert_eq!(unit_strain(0, 1), [[0.0, 0.5], [0.5, 0.0]]);
        assert_eq!(unit_strain(1, 1), [[0.0, 0.0], [0.0, 1.0]]);
        assert_eq!(pair_slot(1, 0), pair_slot(0, 1));
    }

    #[test]
    fn rigid_test_fields_annihilate_load() {
        let c = cell(1.0 / 8.0);
        for params in [unit(), MaterialParams::new(0.2, 1.0, 0.1).unwrap()] {
            for (i, j) in INDEX_PAIRS {
                let (d, s) = solvability_defect(&c, &params, i, j).unwrap();
                assert!(d < SOLVABILITY_TOL * s, "defect {d} scale {s}");
            }
        }
    }

    #[test]
    fn corrupted_load_is_detected() {
        let c = cell(1.0 / 8.0);
        let space = Arc::new(FESpace::vector_p2(c.mesh.clone()));
        let mut load = assemble_stress_load(&space, |ph| unit_stress(&unit(), 0, 0, ph));
        load[space.dof(space.vertex_node(0).unwrap(), 0)] += 1.0;
        let (d, _) = load_defect(&space, &load).unwrap();
        assert!(d > 1e-3);
    }

    #[test]
    fn defect_stable_under_refinement() {
        let d1 = check_solvability(&cell(1.0 / 8.0), &unit(), 0, 0).unwrap();
        let d2 = check_solvability(&cell(1.0 / 16.0), &unit(), 0, 0).unwrap();
        // both at roundoff; compare against a floor
        let floor = 1e-14;
        assert!((d2 + floor) / (d1 + floor) < 10.0 && (d1 + floor) / (d2 + floor) < 10.0 || d1.max(d2) < 1e-12);
    }

    #[test]
    fn constraints_and_incompressibility() {
        let c = cell(1.0 / 16.0);
        let prob = CellProblem::new(c.clone(), unit()).unwrap();
        let f = prob.factor(&SolveOptions::default()).unwrap();
        for (i, j) in INDEX_PAIRS {
            let (_, _, d) = prob.solve_with(&f, i, j).unwrap();
            assert!(d.chi_mean[0].abs() < 1e-10 && d.chi_mean[1].abs() < 1e-10);
            let expected = -delta(i, j) * c.mesh.fluid_area();
            assert!((d.inclusion_divergence - expected).abs() < 1e-10, "{} vs {}", d.inclusion_divergence, expected);
            assert!(d.residual < 1e-9);
        }
        // analytic |ω| to chord accuracy
        let (_, _, d) = prob.solve_with(&f, 0, 0).unwrap();
        assert!((d.inclusion_divergence + PI / 16.0).abs() < 5e-3);
    }

    #[test]
    fn weak_form_consistency_on_random_test_fields() {
        use rand::{Rng, SeedableRng};
        let c = cell(1.0 / 8.0);
        let prob = CellProblem::new(c, unit()).unwrap();
        let f = prob.factor(&SolveOptions::default()).unwrap();
        let (chi, r, _) = prob.solve_with(&f, 0, 0).unwrap();
        let (fu, fp) = prob.rhs(0, 0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = prob.u_space.dof_count();
        let mean = &prob.mean;
        for _ in 0..10 {
            let mut phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // remove the mean so φ is an admissible test field
            let m = mean.apply(&phi);
            let norms: Vec<f64> = mean.rows.iter().map(|r| r.iter().map(|v| v * v).sum()).collect();
            for k in 0..2 {
                for (p, rv) in phi.iter_mut().zip(&mean.rows[k]) {
                    *p -= m[k] / norms[k] * rv;
                }
            }
            let lhs = prob.a.bilinear(&chi.coeffs, &phi) + prob.b.bilinear(&phi, &r.coeffs);
            let rhs: f64 = fu.iter().zip(&phi).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
            let psi: Vec<f64> = (0..prob.p_space.dof_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = prob.b.bilinear(&chi.coeffs, &psi);
            let rhs: f64 = fp.iter().zip(&psi).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn independent_index_order_agrees() {
        // (1,2) and (2,1) have identical data; solving both must agree.
        let c = cell(1.0 / 8.0);
        let (a, ra) = solve_cell_problem(&c, &unit(), 0, 1).unwrap();
        let (b, rb) = solve_cell_problem(&c, &unit(), 1, 0).unwrap();
        let d = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let dr = ra.coeffs.iter().zip(&rb.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-10 && dr < 1e-10);
    }

    #[test]
    fn swap_symmetry_of_centered_disk() {
        let c = cell(1.0 / 32.0);
        let prob = CellProblem::new(c.clone(), unit()).unwrap();
        let f = prob.factor(&SolveOptions::default()).unwrap();
        let (c11, _, _) = prob.solve_with(&f, 0, 0).unwrap();
        let (c22, _, _) = prob.solve_with(&f, 1, 1).unwrap();
        // χ^{22}(y₂, y₁) with swapped components against χ^{11}(y₁, y₂), via point location
        let loc = crate::geometry::Locator::new(&c.mesh);
        let diff = integrate(&prob.u_space, |t, g, l, x| {
            let (v, d) = c11.eval_vector(t, g, l);
            let loc2 = loc.locate_or_nearest(&c.mesh, [x[1], x[0]]);
            let g2 = crate::fem::ElemGeom::new(c.mesh.corners(loc2.triangle));
            let (w, e) = c22.eval_vector(loc2.triangle, &g2, loc2.bary);
            (v[0] - w[1]).powi(2)
                + (v[1] - w[0]).powi(2)
                + (d[0][0] - e[1][1]).powi(2)
                + (d[0][1] - e[1][0]).powi(2)
                + (d[1][0] - e[0][1]).powi(2)
                + (d[1][1] - e[0][0]).powi(2)
        });
        let norm2 = l2_norm(&c11, None).powi(2) + h1_seminorm(&c11).powi(2);
        assert!((diff / norm2).sqrt() < 5e-3, "relative swap gap {}", (diff / norm2).sqrt());
    }

    #[test]
    fn grad_sup_bounds() {
        let c = cell(1.0 / 8.0);
        let s = Arc::new(FESpace::vector_p2_periodic(&c));
        assert_eq!(grad_sup_norm(&FEField::zeros(s)), 0.0);
        let (chi, _) = solve_cell_problem(&c, &unit(), 0, 0).unwrap();
        assert!(grad_sup_norm(&chi) >= h1_seminorm(&chi) / c.mesh.total_area().sqrt());
    }

    #[test]
    fn pressure_is_unique_without_extra_row() {
        // Full-rank B: the augmented system is nonsingular with only the mean rows.
        let c = cell(1.0 / 8.0);
        let prob = CellProblem::new(c, unit()).unwrap();
        assert!(prob.factor(&SolveOptions::default()).is_ok());
        assert!(prob.inf_sup().unwrap() > 0.05);
    }
}
