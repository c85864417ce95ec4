use std::f64::consts::PI;

use crate::fem::quadrature::{GAUSS4_POINTS, GAUSS4_WEIGHTS};
use crate::fem::{ElemGeom, FEField};
use crate::geometry::Locator;

/// Angles per ring of the polar rule.
pub const MOLLIFIER_ANGLES: usize = 12;

/// ρ_ε(y) = ε⁻² c (1 − 4|y/ε|²)³ on |y| < ε/2, discretized by a polar rule
/// (4 Gauss radii × 12 angles) and normalized to unit discrete mass.
#[derive(Debug, Clone)]
pub struct MollifierKernel {
    pub eps: f64,
    nodes: Vec<([f64; 2], f64)>,
}

impl MollifierKernel {
    pub fn new(eps: f64) -> Self {
        assert!(eps > 0.0, "mollifier width must be positive");
        let r_max = 0.5 * eps;
        let dth = 2.0 * PI / MOLLIFIER_ANGLES as f64;
        let mut nodes = Vec::with_capacity(4 * MOLLIFIER_ANGLES);
        for (t, w) in GAUSS4_POINTS.iter().zip(GAUSS4_WEIGHTS) {
            let r = t * r_max;
            let profile = (1.0 - 4.0 * (r / eps).powi(2)).powi(3);
            for k in 0..MOLLIFIER_ANGLES {
                let th = PI / 12.0 + k as f64 * dth;
                nodes.push(([r * th.cos(), r * th.sin()], profile * r * w * r_max * dth));
            }
        }
        let mass: f64 = nodes.iter().map(|n| n.1).sum();
        for n in &mut nodes {
            n.1 /= mass;
        }
        Self { eps, nodes }
    }

    pub fn support_radius(&self) -> f64 {
        0.5 * self.eps
    }

    pub fn mass(&self) -> f64 {
        self.nodes.iter().map(|n| n.1).sum()
    }

    pub fn nodes(&self) -> &[([f64; 2], f64)] {
        &self.nodes
    }

    /// Σ_k w_k f(x − y_k), componentwise.
    pub fn apply<const N: usize>(&self, x: [f64; 2], f: impl Fn([f64; 2]) -> [f64; N]) -> [f64; N] {
        let mut out = [0.0; N];
        for (y, w) in &self.nodes {
            let v = f([x[0] - y[0], x[1] - y[1]]);
            for k in 0..N {
                out[k] += w * v[k];
            }
        }
        out
    }
}

/// Pointwise evaluation of a field with zero extension outside its mesh.
pub(crate) fn eval_zero_extended(field: &FEField, loc: &Locator, x: [f64; 2]) -> [f64; 4] {
    let mesh = &field.space.mesh;
    match loc.locate(mesh, x) {
        Some(l) => field.eval(l.triangle, &ElemGeom::new(mesh.corners(l.triangle)), l.bary).0,
        None => [0.0; 4],
    }
}

/// Discrete convolution S_ε f at every node of the field's space, f being
/// zero-extended outside its mesh. Constants are preserved wherever the
/// kernel support stays inside the mesh.
pub fn smooth(field: &FEField, kernel: &MollifierKernel) -> FEField {
    let loc = Locator::new(&field.space.mesh);
    let nc = field.space.family.components();
    let mut coeffs = vec![0.0; field.space.dof_count()];
    for (n, &x) in field.space.node_coords().iter().enumerate() {
        let v = kernel.apply(x, |p| eval_zero_extended(field, &loc, p));
        coeffs[n * nc..(n + 1) * nc].copy_from_slice(&v[..nc]);
    }
    FEField::new(field.space.clone(), coeffs)
}
