use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::neumann::NeumannData;
use crate::fem::quadrature::{TRI6_BARY, TRI6_WEIGHTS};
use crate::fem::{
    assemble_a, assemble_b, assemble_mass, assemble_neumann_load, assemble_tensor_form, boundary_rigid_rows,
    ConstraintRows, ElemGeom, FEField, FESpace, MaterialParams, SparseOperator,
};
use crate::geometry::DomainMesh;
use crate::homogenize::{check_ellipticity, HomogenizedTensor};
use crate::saddle::{solve, SaddleSystem, SolveMethod, SparseCholesky};
use crate::{Error, Result};

/// Contents of `solution_meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionMeta {
    /// `"eps"` or `"homogenized"`.
    pub problem: String,
    pub eps: f64,
    pub params: Option<MaterialParams>,
    pub g: NeumannData,
    pub g_catalog_id: String,
    pub method: SolveMethod,
    pub residual: f64,
    pub stability_ratio: f64,
    /// a(u, u).
    pub energy: f64,
    /// ∫_{∂Ω} g·u.
    pub boundary_work: f64,
    /// max_k |⟨u, r_k⟩_{∂Ω}|.
    pub trace_orthogonality: f64,
    /// max_k |b(u, ψ_k)| / ‖u‖ (0 without inclusions).
    pub incompressibility: f64,
    pub n_displacement_dofs: usize,
    pub n_pressure_dofs: usize,
}

#[derive(Debug, Clone)]
pub struct EpsSolution {
    pub u: FEField,
    pub p: Option<FEField>,
    pub meta: SolutionMeta,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Assembled {
    space: Arc<FESpace>,
    a: SparseOperator,
    b: Option<(Arc<FESpace>, SparseOperator)>,
}

fn solve_neumann(
    mesh: &DomainMesh,
    op: Assembled,
    g: &NeumannData,
) -> Result<(FEField, Option<FEField>, SolutionMeta)> {
    let verts = &mesh.mesh.vertices;
    g.validate(&mesh.boundary_edges, verts)?;
    let space = op.space;
    let rhs_u = assemble_neumann_load(&space, &mesh.boundary_edges, |x, n| g.eval(x, n));
    let rows = ConstraintRows::new(boundary_rigid_rows(&space, &mesh.boundary_edges));
    let np = op.b.as_ref().map_or(0, |(p, _)| p.dof_count());
    let sys = SaddleSystem {
        a: op.a,
        b: op.b.as_ref().map(|(_, b)| b.clone()),
        c: rows,
        rhs_u,
        rhs_p: vec![0.0; np],
        rhs_c: vec![0.0; 3],
    };
    let sol = solve(&sys)?;
    let u = FEField::new(space.clone(), sol.u);
    let unorm = dot(&u.coeffs, &u.coeffs).sqrt();
    let (p, incompressibility) = match &op.b {
        Some((ps, b)) => {
            let bu = b.matvec(&u.coeffs);
            let m = bu.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            (Some(FEField::new(ps.clone(), sol.p)), if unorm > 0.0 { m / unorm } else { m })
        }
        None => (None, 0.0),
    };
    let trace_orthogonality = sys.c.apply(&u.coeffs).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let meta = SolutionMeta {
        problem: String::new(),
        eps: mesh.eps,
        params: None,
        g: *g,
        g_catalog_id: g.catalog_id().into(),
        method: sol.diagnostics.method,
        residual: sol.diagnostics.residual,
        stability_ratio: sol.diagnostics.stability_ratio,
        energy: sys.a.bilinear(&u.coeffs, &u.coeffs),
        boundary_work: dot(&sys.rhs_u, &u.coeffs),
        trace_orthogonality,
        incompressibility,
        n_displacement_dofs: space.dof_count(),
        n_pressure_dofs: np,
    };
    Ok((u, p, meta))
}

/// The ε-scale transmission problem with traction `g` and rigid-orthogonal trace.
pub fn solve_eps(mesh: &DomainMesh, params: &MaterialParams, g: &NeumannData) -> Result<EpsSolution> {
    params.validate()?;
    let space = Arc::new(FESpace::vector_p2(mesh.mesh.clone()));
    let a = assemble_a(&space, params);
    let b = if mesh.mesh.has_fluid() {
        let ps = Arc::new(FESpace::pressure_p1(mesh.mesh.clone()));
        let b = assemble_b(&space, &ps);
        Some((ps, b))
    } else {
        None
    };
    let (u, p, mut meta) = solve_neumann(mesh, Assembled { space, a, b }, g)?;
    meta.problem = "eps".into();
    meta.params = Some(*params);
    Ok(EpsSolution { u, p, meta })
}

/// The homogenized problem −div(â∇u₀) = 0 with the same boundary frame.
pub fn solve_homogenized_full(mesh: &DomainMesh, t: &HomogenizedTensor, g: &NeumannData) -> Result<EpsSolution> {
    // strong ellipticity guards the constrained system
    let ell = check_ellipticity(t, &MaterialParams { lambda: 0.0, mu: 1.0, mu_tilde: 1.0 }, 0, 0);
    if !(ell.min_value > 0.0) {
        return Err(Error::InvalidMaterial(format!(
            "homogenized tensor is not strongly elliptic (rank-one minimum {:.3e})",
            ell.min_value
        )));
    }
    let space = Arc::new(FESpace::vector_p2(mesh.mesh.clone()));
    let a = assemble_tensor_form(&space, &t.entries);
    let (u, _, mut meta) = solve_neumann(mesh, Assembled { space, a, b: None }, g)?;
    meta.problem = "homogenized".into();
    Ok(EpsSolution { u, p: None, meta })
}

pub fn solve_homogenized(mesh: &DomainMesh, t: &HomogenizedTensor, g: &NeumannData) -> Result<FEField> {
    Ok(solve_homogenized_full(mesh, t, g)?.u)
}

/// M with λ tr(M) I + 2μ M = S for symmetric S: the displacement gradient of
/// the constant-stress field u = M x.
pub fn manufactured_gradient(params: &MaterialParams, s: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let tr = (s[0][0] + s[1][1]) / (2.0 * params.lambda + 2.0 * params.mu);
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let d = (i == j) as u8 as f64;
            m[i][j] = (s[i][j] - params.lambda * tr * d) / (2.0 * params.mu);
        }
    }
    m
}

/// L²-projection of the elementwise gradient of a P2 displacement onto the
/// continuous P1 tensor space (component 2c + d holds ∂_d u^c). Returns the
/// projection and the relative residual of its mass-matrix solve.
pub fn project_gradient(u: &FEField) -> Result<(FEField, f64)> {
    let mesh = u.space.mesh.clone();
    let ts = Arc::new(FESpace::tensor_p1(mesh.clone()));
    let m = assemble_mass(&ts);
    let n = ts.dof_count();
    let mut rhs = vec![0.0; n];
    for t in 0..mesh.n_triangles() {
        let nodes = ts.element_nodes(t).expect("tensor space covers every triangle");
        let geom = ElemGeom::new(mesh.corners(t));
        for (l, w) in TRI6_BARY.iter().zip(TRI6_WEIGHTS) {
            let (_, g) = u.eval_vector(t, &geom, *l);
            for q in 0..3 {
                for c in 0..2 {
                    for d in 0..2 {
                        rhs[ts.dof(nodes[q], 2 * c + d)] += w * geom.area * l[q] * g[c][d];
                    }
                }
            }
        }
    }
    let chol = SparseCholesky::new(&m)?;
    let mut x = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    chol.solve_columns(&mut x);
    let x: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    let mx = m.matvec(&x);
    let r = mx.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = dot(&rhs, &rhs).sqrt();
    Ok((FEField::new(ts, x), if scale > 0.0 { r / scale } else { r }))
}
