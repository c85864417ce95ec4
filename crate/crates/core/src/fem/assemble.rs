//! Element loops for the bilinear forms and load vectors.

use super::material::MaterialParams;
use super::quadrature::{bary_point, GAUSS4_POINTS, GAUSS4_WEIGHTS, TRI6_BARY, TRI6_WEIGHTS};
use super::space::{ElemGeom, FESpace, Family};
use super::sparse::SparseOperator;
use crate::geometry::{BoundaryEdge, Phase};

/// Rank-four coefficient array indexed `[i][j][α][β]`.
pub type Tensor4 = [[[[f64; 2]; 2]; 2]; 2];

/// The constant isotropic tensor λ δ_iα δ_jβ + μ(δ_iβ δ_jα + δ_ij δ_αβ).
pub fn lame_tensor(lambda: f64, mu: f64) -> Tensor4 {
    let d = |a: usize, b: usize| (a == b) as u8 as f64;
    let mut t = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    t[i][j][a][b] = lambda * d(i, a) * d(j, b) + mu * (d(i, b) * d(j, a) + d(i, j) * d(a, b));
                }
            }
        }
    }
    t
}

fn assert_vector(space: &FESpace) {
    assert_eq!(space.family, Family::VectorP2, "displacement space expected");
}

/// Generic vector stiffness: `k(phase)` returns the tensor used on that phase,
/// entry ((a,α),(b,β)) = ∫ Σ_ij T_ij^{αβ} ∂_i φ_a ∂_j φ_b.
fn assemble_vector_stiffness(space: &FESpace, k: impl Fn(Phase) -> Tensor4) -> SparseOperator {
    assert_vector(space);
    let mesh = &space.mesh;
    let mut trip = Vec::with_capacity(mesh.n_triangles() * 144);
    for t in 0..mesh.n_triangles() {
        let nodes = space.element_nodes(t).expect("P2 space covers every triangle");
        let geom = ElemGeom::new(mesh.corners(t));
        let tens = k(mesh.phase[t]);
        let mut local = [[0.0f64; 12]; 12];
        for (l, w) in TRI6_BARY.iter().zip(TRI6_WEIGHTS) {
            let g = space.basis_grads(&geom, *l);
            let w = w * geom.area;
            for a in 0..6 {
                for b in 0..6 {
                    for al in 0..2 {
                        for be in 0..2 {
                            let mut s = 0.0;
                            for i in 0..2 {
                                for j in 0..2 {
                                    s += tens[i][j][al][be] * g[a][i] * g[b][j];
                                }
                            }
                            local[2 * a + al][2 * b + be] += w * s;
                        }
                    }
                }
            }
        }
        for a in 0..6 {
            for al in 0..2 {
                for b in 0..6 {
                    for be in 0..2 {
                        trip.push((space.dof(nodes[a], al), space.dof(nodes[b], be), local[2 * a + al][2 * b + be]));
                    }
                }
            }
        }
    }
    let n = space.dof_count();
    SparseOperator::from_triplets(n, n, trip, true)
}

/// a(u, φ) = ∫_elastic [λ div u div φ + 2μ D(u):D(φ)] + ∫_fluid 2μ̃ D(u):D(φ).
pub fn assemble_a(space: &FESpace, params: &MaterialParams) -> SparseOperator {
    let el = lame_tensor(params.lambda, params.mu);
    let fl = lame_tensor(0.0, params.mu_tilde);
    assemble_vector_stiffness(space, |p| match p {
        Phase::Elastic => el,
        Phase::Fluid => fl,
    })
}

/// ∫ â_ij^{αβ} ∂_j u^β ∂_i φ^α with a constant tensor.
pub fn assemble_tensor_form(space: &FESpace, ahat: &Tensor4) -> SparseOperator {
    // row index (a, α) pairs with ∂_i φ_a, column (b, β) with ∂_j u_b
    let t = *ahat;
    assemble_vector_stiffness(space, |_| t)
}

/// b(u, ψ) = ∫_fluid (div u) ψ; rows index pressures, columns displacements.
pub fn assemble_b(u_space: &FESpace, p_space: &FESpace) -> SparseOperator {
    assert_vector(u_space);
    let mesh = &u_space.mesh;
    let mut trip = Vec::new();
    for t in 0..mesh.n_triangles() {
        let Some(pn) = p_space.element_nodes(t) else { continue };
        if mesh.phase[t] != Phase::Fluid {
            continue;
        }
        let un = u_space.element_nodes(t).unwrap();
        let geom = ElemGeom::new(mesh.corners(t));
        let mut local = [[0.0f64; 12]; 3];
        for (l, w) in TRI6_BARY.iter().zip(TRI6_WEIGHTS) {
            let g = u_space.basis_grads(&geom, *l);
            for q in 0..3 {
                for a in 0..6 {
                    for c in 0..2 {
                        local[q][2 * a + c] += w * geom.area * l[q] * g[a][c];
                    }
                }
            }
        }
        for q in 0..3 {
            for a in 0..6 {
                for c in 0..2 {
                    trip.push((p_space.dof(pn[q], 0), u_space.dof(un[a], c), local[q][2 * a + c]));
                }
            }
        }
    }
    SparseOperator::from_triplets(p_space.dof_count(), u_space.dof_count(), trip, false)
}

/// L² mass matrix, componentwise for vector and tensor families.
pub fn assemble_mass(space: &FESpace) -> SparseOperator {
    assemble_mass_and_stiffness(space, 1.0, 0.0)
}

/// H¹ Gram matrix: ∫ u·v + ∇u:∇v.
pub fn assemble_h1_gram(space: &FESpace) -> SparseOperator {
    assemble_mass_and_stiffness(space, 1.0, 1.0)
}

fn assemble_mass_and_stiffness(space: &FESpace, cm: f64, cs: f64) -> SparseOperator {
    let mesh = &space.mesh;
    let nc = space.family.components();
    let nl = space.family.local_nodes();
    let mut trip = Vec::new();
    for t in 0..mesh.n_triangles() {
        let Some(nodes) = space.element_nodes(t) else { continue };
        let geom = ElemGeom::new(mesh.corners(t));
        let mut local = [[0.0f64; 6]; 6];
        for (l, w) in TRI6_BARY.iter().zip(TRI6_WEIGHTS) {
            let (phi, _) = space.basis(*l);
            let g = space.basis_grads(&geom, *l);
            for a in 0..nl {
                for b in 0..nl {
                    local[a][b] +=
                        w * geom.area * (cm * phi[a] * phi[b] + cs * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
                }
            }
        }
        for a in 0..nl {
            for b in 0..nl {
                for c in 0..nc {
                    trip.push((space.dof(nodes[a], c), space.dof(nodes[b], c), local[a][b]));
                }
            }
        }
    }
    let n = space.dof_count();
    SparseOperator::from_triplets(n, n, trip, true)
}

/// ∫ σ(phase) : ∇φ for a stress that is constant on each phase.
pub fn assemble_stress_load(space: &FESpace, sigma: impl Fn(Phase) -> [[f64; 2]; 2]) -> Vec<f64> {
    assert_vector(space);
    let mesh = &space.mesh;
    let mut f = vec![0.0; space.dof_count()];
    for t in 0..mesh.n_triangles() {
        let nodes = space.element_nodes(t).unwrap();
        let geom = ElemGeom::new(mesh.corners(t));
        let s = sigma(mesh.phase[t]);
        for (l, w) in TRI6_BARY.iter().zip(TRI6_WEIGHTS) {
            let g = space.basis_grads(&geom, *l);
            for a in 0..6 {
                for c in 0..2 {
                    f[space.dof(nodes[a], c)] += w * geom.area * (s[c][0] * g[a][0] + s[c][1] * g[a][1]);
                }
            }
        }
    }
    f
}

/// ∫ f ψ over the support of a scalar space, for a constant `f`.
pub fn assemble_scalar_load(space: &FESpace, f: f64) -> Vec<f64> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.dof_count()];
    for t in 0..mesh.n_triangles() {
        let Some(nodes) = space.element_nodes(t) else { continue };
        let a = mesh.area(t);
        for &n in nodes.iter().take(3) {
            out[space.dof(n, 0)] += f * a / 3.0;
        }
    }
    out
}

/// Trace data of the P2 space on a boundary edge: the three nodes (vertex a,
/// vertex b, midpoint) and the 1D quadratic basis.
fn edge_trace(space: &FESpace, a: usize, b: usize) -> [usize; 3] {
    [
        space.vertex_node(a).expect("boundary vertex node"),
        space.vertex_node(b).expect("boundary vertex node"),
        space.edge_node(a, b).expect("boundary edge is a mesh edge"),
    ]
}

#[inline]
fn p2_line(t: f64) -> [f64; 3] {
    [(1.0 - t) * (1.0 - 2.0 * t), t * (2.0 * t - 1.0), 4.0 * t * (1.0 - t)]
}

/// ∫_{∂Ω} g(x, N)·φ ds edge by edge, with the discrete edge normal N.
pub fn assemble_neumann_load(
    space: &FESpace,
    edges: &[BoundaryEdge],
    g: impl Fn([f64; 2], [f64; 2]) -> [f64; 2],
) -> Vec<f64> {
    assert_vector(space);
    let v = &space.mesh.vertices;
    let mut f = vec![0.0; space.dof_count()];
    for e in edges {
        let nodes = edge_trace(space, e.a, e.b);
        let (p, q) = (v[e.a], v[e.b]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        for (t, w) in GAUSS4_POINTS.iter().zip(GAUSS4_WEIGHTS) {
            let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            let gv = g(x, e.normal);
            let phi = p2_line(*t);
            for k in 0..3 {
                for c in 0..2 {
                    f[space.dof(nodes[k], c)] += w * len * gv[c] * phi[k];
                }
            }
        }
    }
    f
}

/// Rows ∫ φ·e_c over the mesh, c = 1, 2 (zero-mean constraint).
pub fn mean_rows(space: &FESpace) -> Vec<Vec<f64>> {
    assert_vector(space);
    let mesh = &space.mesh;
    let mut rows = vec![vec![0.0; space.dof_count()]; 2];
    for t in 0..mesh.n_triangles() {
        let nodes = space.element_nodes(t).unwrap();
        let area = mesh.area(t);
        // ∫ P2 vertex functions = 0, edge functions = area / 3
        for &n in &nodes[3..6] {
            for (c, row) in rows.iter_mut().enumerate() {
                row[space.dof(n, c)] += area / 3.0;
            }
        }
    }
    rows
}

/// Rows ∫_{∂Ω} φ·r_k ds for the rigid motions (1,0), (0,1), (−y, x).
pub fn boundary_rigid_rows(space: &FESpace, edges: &[BoundaryEdge]) -> Vec<Vec<f64>> {
    assert_vector(space);
    let v = &space.mesh.vertices;
    let mut rows = vec![vec![0.0; space.dof_count()]; 3];
    for e in edges {
        let nodes = edge_trace(space, e.a, e.b);
        let (p, q) = (v[e.a], v[e.b]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        for (t, w) in GAUSS4_POINTS.iter().zip(GAUSS4_WEIGHTS) {
            let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            let phi = p2_line(*t);
            for k in 0..3 {
                let wk = w * len * phi[k];
                rows[0][space.dof(nodes[k], 0)] += wk;
                rows[1][space.dof(nodes[k], 1)] += wk;
                rows[2][space.dof(nodes[k], 0)] -= wk * x[1];
                rows[2][space.dof(nodes[k], 1)] += wk * x[0];
            }
        }
    }
    rows
}

/// ∫_{∂Ω} g·r_k for the three rigid motions, with the same edge quadrature
/// as [`assemble_neumann_load`].
pub fn boundary_moments(
    edges: &[BoundaryEdge],
    vertices: &[[f64; 2]],
    g: impl Fn([f64; 2], [f64; 2]) -> [f64; 2],
) -> [f64; 3] {
    let mut m = [0.0; 3];
    for e in edges {
        let (p, q) = (vertices[e.a], vertices[e.b]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        for (t, w) in GAUSS4_POINTS.iter().zip(GAUSS4_WEIGHTS) {
            let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            let gv = g(x, e.normal);
            m[0] += w * len * gv[0];
            m[1] += w * len * gv[1];
            m[2] += w * len * (-x[1] * gv[0] + x[0] * gv[1]);
        }
    }
    m
}

/// Sum of a per-quadrature-point integrand over the mesh (degree-4 rule).
pub fn integrate(space: &FESpace, mut f: impl FnMut(usize, &ElemGeom, [f64; 3], [f64; 2]) -> f64) -> f64 {
    let mesh = &space.mesh;
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        let c = mesh.corners(t);
        let geom = ElemGeom::new(c);
        for (l, w) in TRI6_BARY.iter().zip(TRI6_WEIGHTS) {
            s += w * geom.area * f(t, &geom, *l, bary_point(&c, *l));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_unit_cell_mesh, InclusionShape, TriMesh};
    use std::sync::Arc;

    fn unit_square(n: usize) -> Arc<TriMesh> {
        let mut v = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                v.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let mut t = Vec::new();
        let id = |i: usize, j: usize| j * (n + 1) + i;
        for j in 0..n {
            for i in 0..n {
                t.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                t.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let nt = t.len();
        Arc::new(TriMesh::new(v, t, vec![Phase::Elastic; nt], Vec::new()))
    }

    fn params() -> MaterialParams {
        MaterialParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn rigid_motions_are_in_the_kernel() {
        let cell = build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), 0.2).unwrap();
        let s = Arc::new(FESpace::vector_p2(cell.mesh.clone()));
        let a = assemble_a(&s, &params());
        assert!(a.symmetry_holds());
        for f in [s.interpolate(|_| vec![1.0, -2.0]), s.interpolate(|x| vec![-x[1], x[0]])] {
            assert!(a.bilinear(&f.coeffs, &f.coeffs).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_strain_energy() {
        let s = Arc::new(FESpace::vector_p2(unit_square(3)));
        let a = assemble_a(&s, &params());
        let u = s.interpolate(|x| vec![x[0], 0.0]);
        assert!((a.bilinear(&u.coeffs, &u.coeffs) - 3.0).abs() < 1e-12);
        let lame = assemble_tensor_form(&s, &lame_tensor(1.0, 1.0));
        assert!(lame.add_scaled(&a, -1.0).max_abs() < 1e-13);
    }

    #[test]
    fn one_triangle_reference_matrices() {
        // Reference triangle, P2 displacements; compare with the closed-form
        // matrices K = λ Dᵀ_div D_div + μ(...) built from exact integrals.
        let m = Arc::new(TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![Phase::Fluid],
            Vec::new(),
        ));
        let s = FESpace::vector_p2(m.clone());
        let p = FESpace::pressure_p1(m.clone());
        let k = assemble_a(&s, &MaterialParams::new(3.0, 2.0, 0.7).unwrap()).to_dense();
        let b = assemble_b(&s, &p).to_dense();
        // Exact P2 gradient products on the reference triangle via the
        // barycentric integration formula ∫ l^a = a! 2A / (|a| + 2)!.
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        let mono = |e: [usize; 3]| fact(e[0]) * fact(e[1]) * fact(e[2]) * 2.0 * 0.5 / fact(e[0] + e[1] + e[2] + 2);
        // basis gradients as sums of (coefficient, barycentric exponent, direction)
        let gl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let grad_terms = |a: usize| -> Vec<(f64, [usize; 3], [f64; 2])> {
            let unit = |i: usize| {
                let mut e = [0; 3];
                e[i] = 1;
                e
            };
            match a {
                0..=2 => vec![(4.0, unit(a), gl[a]), (-1.0, [0, 0, 0], gl[a])],
                _ => {
                    let (i, j) = P2_EDGES_REF[a - 3];
                    vec![(4.0, unit(j), gl[i]), (4.0, unit(i), gl[j])]
                }
            }
        };
        let int_dd = |a: usize, b: usize, c: usize, d: usize| -> f64 {
            let mut s = 0.0;
            for (ca, ea, ga) in grad_terms(a) {
                for (cb, eb, gb) in grad_terms(b) {
                    s += ca * cb * ga[c] * gb[d] * mono([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]]);
                }
            }
            s
        };
        let mu = 0.7;
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..2 {
                    for d in 0..2 {
                        let lap = int_dd(a, b, 0, 0) + int_dd(a, b, 1, 1);
                        let exact = mu * (if c == d { lap } else { 0.0 } + int_dd(a, b, d, c));
                        assert!((k[(2 * a + c, 2 * b + d)] - exact).abs() < 1e-12);
                    }
                }
            }
        }
        // b: ∫ l_q ∂_c φ_a
        for q in 0..3 {
            for a in 0..6 {
                for c in 0..2 {
                    let mut exact = 0.0;
                    for (ca, ea, ga) in grad_terms(a) {
                        let mut e = ea;
                        e[q] += 1;
                        exact += ca * ga[c] * mono(e);
                    }
                    assert!((b[(q, 2 * a + c)] - exact).abs() < 1e-12);
                }
            }
        }
    }

    const P2_EDGES_REF: [(usize, usize); 3] = super::super::space::P2_EDGES;

    #[test]
    fn divergence_form_examples() {
        let cell = build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), 0.1).unwrap();
        let s = Arc::new(FESpace::vector_p2(cell.mesh.clone()));
        let p = FESpace::pressure_p1(cell.mesh.clone());
        let b = assemble_b(&s, &p);
        let one = vec![1.0; p.dof_count()];
        let rot = s.interpolate(|x| vec![-x[1], x[0]]);
        assert!(b.matvec(&rot.coeffs).iter().all(|v| v.abs() < 1e-14));
        let dil = s.interpolate(|x| vec![x[0], x[1]]);
        let bd: f64 = b.bilinear(&dil.coeffs, &one);
        assert!((bd - 2.0 * cell.mesh.fluid_area()).abs() < 1e-13);
        let p11 = s.interpolate(|x| vec![x[0], 0.0]);
        let bp = b.bilinear(&p11.coeffs, &one);
        assert!((bp - std::f64::consts::PI / 16.0).abs() < 2.0 * 0.01);
        assert!((bp - cell.mesh.fluid_area()).abs() < 1e-13);
    }

    #[test]
    fn mean_rows_integrate_constants() {
        let s = Arc::new(FESpace::vector_p2(unit_square(4)));
        let r = mean_rows(&s);
        let u = s.interpolate(|x| vec![x[0] * x[0], 2.0]);
        let m0: f64 = r[0].iter().zip(&u.coeffs).map(|(a, b)| a * b).sum();
        let m1: f64 = r[1].iter().zip(&u.coeffs).map(|(a, b)| a * b).sum();
        assert!((m0 - 1.0 / 3.0).abs() < 1e-14);
        assert!((m1 - 2.0).abs() < 1e-14);
    }
}
