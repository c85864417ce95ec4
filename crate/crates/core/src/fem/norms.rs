use super::assemble::integrate;
use super::quadrature::{TRI6_BARY, TRI6_WEIGHTS};
use super::space::{ElemGeom, FEField};
use crate::geometry::Phase;

/// ‖f‖_{L²} over the whole mesh or one phase; an empty subdomain gives 0.
pub fn l2_norm(f: &FEField, subdomain: Option<Phase>) -> f64 {
    let nc = f.space.family.components();
    let mesh = &f.space.mesh;
    integrate(&f.space, |t, g, l, _| {
        if subdomain.is_some_and(|p| mesh.phase[t] != p) {
            return 0.0;
        }
        let (v, _) = f.eval(t, g, l);
        v[..nc].iter().map(|x| x * x).sum()
    })
    .sqrt()
}

/// ‖∇f‖_{L²}.
pub fn h1_seminorm(f: &FEField) -> f64 {
    let nc = f.space.family.components();
    integrate(&f.space, |t, g, l, _| {
        let (_, d) = f.eval(t, g, l);
        d[..nc].iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum()
    })
    .sqrt()
}

/// ‖f‖²_{H¹} = ‖f‖²_{L²} + ‖∇f‖²_{L²}.
pub fn h1_norm(f: &FEField) -> f64 {
    (l2_norm(f, None).powi(2) + h1_seminorm(f).powi(2)).sqrt()
}

/// Gradients `g[c][d] = ∂_d u^c` of a vector field at every quadrature point,
/// triangle-major, together with the quadrature weight (area included).
pub fn grad_at_quadpoints(f: &FEField) -> Vec<([[f64; 2]; 2], f64)> {
    let mesh = &f.space.mesh;
    let mut out = Vec::with_capacity(mesh.n_triangles() * 6);
    for t in 0..mesh.n_triangles() {
        let geom = ElemGeom::new(mesh.corners(t));
        for (l, w) in TRI6_BARY.iter().zip(TRI6_WEIGHTS) {
            let (_, g) = f.eval_vector(t, &geom, *l);
            out.push((g, w * geom.area));
        }
    }
    out
}
