//! Cutoff, mollifier, the corrector field w_ε and the two-scale error norms.

mod cutoff;
mod mollifier;
mod two_scale;

pub use cutoff::{check_cutoff, eval_cutoff, CutoffCheck, CutoffEta, CUTOFF_SLOPE};
pub use mollifier::{smooth, MollifierKernel, MOLLIFIER_ANGLES};
pub use two_scale::{CellSample, CellSampler, TwoScaleErrors, TwoScaleEvaluator, Variant};

use crate::fem::quadrature::{TRI6_BARY, TRI6_WEIGHTS};
use crate::fem::{h1_norm, ElemGeom, FEField, Family, P2_EDGES};

/// Broken H² norm of a P2 displacement (second derivatives elementwise).
pub fn h2_norm(u: &FEField) -> f64 {
    assert_eq!(u.space.family, Family::VectorP2, "P2 displacement expected");
    let mesh = &u.space.mesh;
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        let nodes = u.space.element_nodes(t).expect("P2 space covers every triangle");
        let g = ElemGeom::new(mesh.corners(t)).grad_l;
        // Hessians of the six basis functions (constant on the element)
        let mut hb = [[[0.0; 2]; 2]; 6];
        for a in 0..3 {
            for i in 0..2 {
                for j in 0..2 {
                    hb[a][i][j] = 4.0 * g[a][i] * g[a][j];
                }
            }
        }
        for (k, (a, b)) in P2_EDGES.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    hb[3 + k][i][j] = 4.0 * (g[*a][i] * g[*b][j] + g[*b][i] * g[*a][j]);
                }
            }
        }
        for c in 0..2 {
            let mut h = [[0.0; 2]; 2];
            for (a, &n) in nodes.iter().enumerate() {
                let v = u.coeffs[u.space.dof(n, c)];
                for i in 0..2 {
                    for j in 0..2 {
                        h[i][j] += v * hb[a][i][j];
                    }
                }
            }
            s += mesh.area(t) * h.iter().flatten().map(|x| x * x).sum::<f64>();
        }
    }
    (h1_norm(u).powi(2) + s).sqrt()
}

/// ‖f − S_ε f‖_{L²} over the part of a plain mesh at distance ≥ `margin` from
/// ∂Ω, for an analytic scalar `f` (quadrature on the mesh).
pub fn mollification_defect(
    mesh: &crate::geometry::DomainMesh,
    kernel: &MollifierKernel,
    margin: f64,
    f: impl Fn([f64; 2]) -> f64,
) -> f64 {
    let m = &mesh.mesh;
    let mut s = 0.0;
    for t in 0..m.n_triangles() {
        let c = m.corners(t);
        let area = m.area(t);
        for (l, w) in TRI6_BARY.iter().zip(TRI6_WEIGHTS) {
            let x = crate::fem::quadrature::bary_point(&c, *l);
            if mesh.domain.distance_to_boundary(x) < margin {
                continue;
            }
            let sf = kernel.apply(x, |p| [f(p)])[0];
            s += w * area * (f(x) - sf).powi(2);
        }
    }
    s.sqrt()
}
