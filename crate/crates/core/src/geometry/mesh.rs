use serde::{Deserialize, Serialize};

/// Material phase of a triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// Lamé material (Y_f on the cell, Ω_ε on the domain).
    Elastic,
    /// Incompressible Stokes inclusion (ω on the cell, D_ε on the domain).
    Fluid,
}

/// An edge of the discrete inclusion boundary. `normal` points out of the fluid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceEdge {
    pub a: usize,
    pub b: usize,
    pub normal: [f64; 2],
}

/// An edge of the discrete ∂Ω, oriented counter-clockwise; `normal` points out of Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub normal: [f64; 2],
}

/// A tagged, counter-clockwise oriented triangulation.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub phase: Vec<Phase>,
    pub interface_edges: Vec<InterfaceEdge>,
    /// Largest triangle diameter.
    pub h: f64,
}

impl TriMesh {
    pub fn new(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        phase: Vec<Phase>,
        interface_edges: Vec<InterfaceEdge>,
    ) -> Self {
        for t in triangles.iter_mut() {
            if signed_area(&vertices, *t) < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut mesh = Self { vertices, triangles, phase, interface_edges, h: 0.0 };
        mesh.h = (0..mesh.triangles.len()).map(|t| mesh.diameter(t)).fold(0.0, f64::max);
        mesh
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, self.triangles[t])
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [p, q, r] = self.corners(t);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [p, q, r] = self.corners(t);
        dist(p, q).max(dist(q, r)).max(dist(r, p))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn phase_area(&self, phase: Phase) -> f64 {
        (0..self.n_triangles()).filter(|&t| self.phase[t] == phase).map(|t| self.area(t)).sum()
    }

    pub fn fluid_area(&self) -> f64 {
        self.phase_area(Phase::Fluid)
    }

    pub fn has_fluid(&self) -> bool {
        self.phase.contains(&Phase::Fluid)
    }

    /// Smallest ratio of triangle area to squared diameter.
    pub fn min_shape_quality(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t) / self.diameter(t).powi(2)).fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned bounding box `[xmin, ymin, xmax, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for v in &self.vertices {
            bb[0] = bb[0].min(v[0]);
            bb[1] = bb[1].min(v[1]);
            bb[2] = bb[2].max(v[0]);
            bb[3] = bb[3].max(v[1]);
        }
        bb
    }
}

pub(crate) fn signed_area(v: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let [a, b, c] = t.map(|i| v[i]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Outward normal of a counter-clockwise edge a → b.
pub(crate) fn edge_normal(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l = dx.hypot(dy);
    [dy / l, -dx / l]
}

/// Even-odd point in polygon test.
pub(crate) fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi[1] > p[1]) != (pj[1] > p[1]) {
            let x = pj[0] + (p[1] - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}
