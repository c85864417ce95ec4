use serde::{Deserialize, Serialize};

use crate::geometry::{DomainMesh, DomainShape};

/// max of s'(t) for the quintic ramp s(t) = 6t⁵ − 15t⁴ + 10t³.
pub const CUTOFF_SLOPE: f64 = 1.875;

/// η_ε: 0 within 3ε of ∂Ω, 1 beyond 4ε, quintic in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffEta {
    pub eps: f64,
    pub domain: DomainShape,
}

fn ramp(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        let t2 = t * t;
        (t2 * t * (10.0 - 15.0 * t + 6.0 * t2), 30.0 * t2 * (1.0 - t) * (1.0 - t))
    }
}

impl CutoffEta {
    pub fn new(eps: f64, domain: DomainShape) -> Self {
        Self { eps, domain }
    }

    /// Value and d/d(dist) at a boundary distance.
    pub fn profile(&self, dist: f64) -> (f64, f64) {
        let (s, ds) = ramp((dist - 3.0 * self.eps) / self.eps);
        (s, ds / self.eps)
    }
}

/// (η_ε(x), ∇η_ε(x)) given dist(x, ∂Ω).
pub fn eval_cutoff(x: [f64; 2], eta: &CutoffEta, dist: f64) -> (f64, [f64; 2]) {
    let (v, dv) = eta.profile(dist);
    if dv == 0.0 {
        return (v, [0.0, 0.0]);
    }
    let g = eta.domain.distance_gradient(x);
    (v, [dv * g[0], dv * g[1]])
}

/// Per-vertex plateau and slope audit of η_ε on a mesh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffCheck {
    pub n_vertices: usize,
    pub violations: usize,
    /// max |∇η_ε| · ε over the vertices (≤ 1.875 expected).
    pub max_scaled_slope: f64,
}

impl CutoffCheck {
    pub fn pass(&self) -> bool {
        self.violations == 0 && self.max_scaled_slope <= CUTOFF_SLOPE * (1.0 + 1e-12)
    }
}

pub fn check_cutoff(mesh: &DomainMesh, eta: &CutoffEta) -> CutoffCheck {
    let mut violations = 0;
    let mut max_scaled_slope = 0.0f64;
    for (v, &x) in mesh.mesh.vertices.iter().enumerate() {
        let d = mesh.vertex_boundary_distance[v];
        let (val, g) = eval_cutoff(x, eta, d);
        let slope = g[0].hypot(g[1]) * eta.eps;
        max_scaled_slope = max_scaled_slope.max(slope);
        let bad = !(0.0..=1.0).contains(&val)
            || (d >= 4.0 * eta.eps && val != 1.0)
            || (d <= 3.0 * eta.eps && val != 0.0)
            || slope > CUTOFF_SLOPE * (1.0 + 1e-12);
        violations += bad as usize;
    }
    CutoffCheck { n_vertices: mesh.mesh.n_vertices(), violations, max_scaled_slope }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_and_midpoint() {
        let eps = 0.1;
        let eta = CutoffEta::new(eps, DomainShape::disk(0.5));
        let x = [0.2, 0.0];
        assert_eq!(eval_cutoff(x, &eta, 2.0 * eps), (0.0, [0.0, 0.0]));
        assert_eq!(eval_cutoff(x, &eta, 5.0 * eps), (1.0, [0.0, 0.0]));
        let (v, g) = eval_cutoff(x, &eta, 3.5 * eps);
        assert!((v - 0.5).abs() < 1e-14);
        assert!((g[0].hypot(g[1]) - 1.875 / eps).abs() < 1e-10);
        // distance decreases outward, so η grows inward
        assert!(g[0] < 0.0);
    }

    #[test]
    fn slope_bound_is_sharp() {
        let eta = CutoffEta::new(1.0, DomainShape::disk(10.0));
        let m = (0..=1000).map(|k| eta.profile(3.0 + k as f64 / 1000.0).1).fold(0.0, f64::max);
        assert!((m - CUTOFF_SLOPE).abs() < 1e-12);
    }

    #[test]
    fn audit_on_mesh() {
        let d = crate::geometry::build_plain_domain_mesh(DomainShape::disk(0.5), 0.02).unwrap();
        let c = check_cutoff(&d, &CutoffEta::new(1.0 / 32.0, d.domain));
        assert!(c.pass(), "{c:?}");
        assert!(c.max_scaled_slope > 1.5);
    }
}
