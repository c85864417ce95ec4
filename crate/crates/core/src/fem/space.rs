use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{CellMesh, Phase, TriMesh};

pub(crate) const NONE: usize = usize::MAX;

/// Finite-element family of a space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Continuous piecewise-quadratic 2-vectors (displacements).
    VectorP2,
    /// Continuous piecewise-linear scalars supported on fluid triangles (pressures).
    ScalarP1Fluid,
    /// Continuous piecewise-linear scalars on the whole mesh.
    ScalarP1,
    /// Continuous piecewise-linear 2×2 tensors, row-major components.
    TensorP1,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::VectorP2 => "vectorP2",
            Family::ScalarP1Fluid => "scalarP1_fluid",
            Family::ScalarP1 => "scalarP1",
            Family::TensorP1 => "tensorP1",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        [Family::VectorP2, Family::ScalarP1Fluid, Family::ScalarP1, Family::TensorP1].into_iter().find(|f| f.tag() == s)
    }

    pub fn components(&self) -> usize {
        match self {
            Family::VectorP2 => 2,
            Family::ScalarP1Fluid | Family::ScalarP1 => 1,
            Family::TensorP1 => 4,
        }
    }

    /// Local nodes per triangle.
    pub fn local_nodes(&self) -> usize {
        match self {
            Family::VectorP2 => 6,
            _ => 3,
        }
    }
}

/// Constraints a space participates in. Periodicity is built into the dof
/// map; the others are imposed by multiplier rows at solve time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    Periodic,
    ZeroMean,
    RigidOrthogonal,
}

/// Gradients of the barycentric coordinates and the area of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElemGeom {
    pub area: f64,
    pub grad_l: [[f64; 2]; 3],
}

impl ElemGeom {
    pub fn new(c: [[f64; 2]; 3]) -> Self {
        let [a, b, cc] = c;
        let det = (b[0] - a[0]) * (cc[1] - a[1]) - (cc[0] - a[0]) * (b[1] - a[1]);
        let grad_l = [
            [(b[1] - cc[1]) / det, (cc[0] - b[0]) / det],
            [(cc[1] - a[1]) / det, (a[0] - cc[0]) / det],
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
        ];
        Self { area: 0.5 * det, grad_l }
    }
}

/// Local P2 edges, matching local nodes 3, 4, 5.
pub const P2_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

#[inline]
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

#[inline]
pub fn p2_grads(g: &[[f64; 2]; 3], l: [f64; 3]) -> [[f64; 2]; 6] {
    let s = |a: f64, x: [f64; 2], b: f64, y: [f64; 2]| [4.0 * (a * x[0] + b * y[0]), 4.0 * (a * x[1] + b * y[1])];
    [
        [(4.0 * l[0] - 1.0) * g[0][0], (4.0 * l[0] - 1.0) * g[0][1]],
        [(4.0 * l[1] - 1.0) * g[1][0], (4.0 * l[1] - 1.0) * g[1][1]],
        [(4.0 * l[2] - 1.0) * g[2][0], (4.0 * l[2] - 1.0) * g[2][1]],
        s(l[1], g[0], l[0], g[1]),
        s(l[2], g[1], l[1], g[2]),
        s(l[0], g[2], l[2], g[0]),
    ]
}

/// A finite-element space on a triangulation.
#[derive(Debug, Clone)]
pub struct FESpace {
    pub mesh: Arc<TriMesh>,
    pub family: Family,
    pub constraints: Vec<ConstraintKind>,
    n_nodes: usize,
    /// Global node of each local node; P1 families use the first three,
    /// and triangles outside the support hold `NONE`.
    elem_nodes: Vec<[usize; 6]>,
    node_coords: Vec<[f64; 2]>,
    vertex_node: Vec<usize>,
    edge_node: HashMap<(usize, usize), usize>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl FESpace {
    /// Unconstrained P2 displacement space.
    pub fn vector_p2(mesh: Arc<TriMesh>) -> Self {
        Self::build_p2(mesh, None)
    }

    /// P2 displacement space on the unit cell with opposite faces identified.
    pub fn vector_p2_periodic(cell: &CellMesh) -> Self {
        Self::build_p2(cell.mesh.clone(), Some(cell))
    }

    fn build_p2(mesh: Arc<TriMesh>, cell: Option<&CellMesh>) -> Self {
        let nv = mesh.n_vertices();
        let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        for tri in &mesh.triangles {
            for (a, b) in P2_EDGES {
                let k = edge_key(tri[a], tri[b]);
                edge_id.entry(k).or_insert_with(|| {
                    edges.push(k);
                    edges.len() - 1
                });
            }
        }
        let n_raw = nv + edges.len();
        let mut master = vec![0usize; n_raw];
        for (v, m) in master.iter_mut().enumerate().take(nv) {
            *m = cell.map_or(v, |c| c.periodic_master(v));
        }
        for (e, &(a, b)) in edges.iter().enumerate() {
            master[nv + e] = match cell.and_then(|c| c.periodic_edge_image(a, b)) {
                Some((pa, pb)) => nv + edge_id[&edge_key(pa, pb)],
                None => nv + e,
            };
        }
        // compress masters in raw order
        let mut compressed = vec![NONE; n_raw];
        let mut node_coords = Vec::new();
        for r in 0..n_raw {
            if master[r] == r {
                compressed[r] = node_coords.len();
                node_coords.push(if r < nv {
                    mesh.vertices[r]
                } else {
                    let (a, b) = edges[r - nv];
                    let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
                    [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
                });
            }
        }
        let node_of = |r: usize| compressed[master[r]];
        let elem_nodes = mesh
            .triangles
            .iter()
            .map(|tri| {
                let mut n = [0; 6];
                for k in 0..3 {
                    n[k] = node_of(tri[k]);
                }
                for (k, (a, b)) in P2_EDGES.iter().enumerate() {
                    n[3 + k] = node_of(nv + edge_id[&edge_key(tri[*a], tri[*b])]);
                }
                n
            })
            .collect();
        let vertex_node = (0..nv).map(node_of).collect();
        let edge_node = edges.iter().enumerate().map(|(e, &k)| (k, node_of(nv + e))).collect();
        Self {
            n_nodes: node_coords.len(),
            mesh,
            family: Family::VectorP2,
            constraints: if cell.is_some() { vec![ConstraintKind::Periodic] } else { Vec::new() },
            elem_nodes,
            node_coords,
            vertex_node,
            edge_node,
        }
    }

    /// P1 pressures on fluid triangles only.
    pub fn pressure_p1(mesh: Arc<TriMesh>) -> Self {
        Self::build_p1(mesh, Family::ScalarP1Fluid)
    }

    pub fn scalar_p1(mesh: Arc<TriMesh>) -> Self {
        Self::build_p1(mesh, Family::ScalarP1)
    }

    pub fn tensor_p1(mesh: Arc<TriMesh>) -> Self {
        Self::build_p1(mesh, Family::TensorP1)
    }

    fn build_p1(mesh: Arc<TriMesh>, family: Family) -> Self {
        let fluid_only = family == Family::ScalarP1Fluid;
        let supported = |t: usize| !fluid_only || mesh.phase[t] == Phase::Fluid;
        let mut used = vec![false; mesh.n_vertices()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if supported(t) {
                for &v in tri {
                    used[v] = true;
                }
            }
        }
        let mut vertex_node = vec![NONE; mesh.n_vertices()];
        let mut node_coords = Vec::new();
        for v in 0..mesh.n_vertices() {
            if used[v] {
                vertex_node[v] = node_coords.len();
                node_coords.push(mesh.vertices[v]);
            }
        }
        let elem_nodes = mesh
            .triangles
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                if supported(t) {
                    [vertex_node[tri[0]], vertex_node[tri[1]], vertex_node[tri[2]], NONE, NONE, NONE]
                } else {
                    [NONE; 6]
                }
            })
            .collect();
        Self {
            n_nodes: node_coords.len(),
            mesh,
            family,
            constraints: Vec::new(),
            elem_nodes,
            node_coords,
            vertex_node,
            edge_node: HashMap::new(),
        }
    }

    pub fn with_constraint(mut self, c: ConstraintKind) -> Self {
        if !self.constraints.contains(&c) {
            self.constraints.push(c);
        }
        self
    }

    pub fn is_periodic(&self) -> bool {
        self.constraints.contains(&ConstraintKind::Periodic)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dof_count(&self) -> usize {
        self.n_nodes * self.family.components()
    }

    #[inline]
    pub fn dof(&self, node: usize, component: usize) -> usize {
        node * self.family.components() + component
    }

    /// Global nodes of triangle `t`, or `None` outside the support.
    #[inline]
    pub fn element_nodes(&self, t: usize) -> Option<&[usize]> {
        let n = &self.elem_nodes[t];
        if n[0] == NONE {
            None
        } else {
            Some(&n[..self.family.local_nodes()])
        }
    }

    pub fn node_coords(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    /// The node sitting on mesh vertex `v`.
    pub fn vertex_node(&self, v: usize) -> Option<usize> {
        let n = self.vertex_node[v];
        (n != NONE).then_some(n)
    }

    /// The P2 node at the midpoint of mesh edge `(a, b)`.
    pub fn edge_node(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_node.get(&edge_key(a, b)).copied()
    }

    /// Basis values at barycentric point `l` in local-node order.
    #[inline]
    pub fn basis(&self, l: [f64; 3]) -> ([f64; 6], usize) {
        match self.family {
            Family::VectorP2 => (p2_values(l), 6),
            _ => ([l[0], l[1], l[2], 0.0, 0.0, 0.0], 3),
        }
    }

    /// Basis gradients at barycentric point `l`.
    #[inline]
    pub fn basis_grads(&self, g: &ElemGeom, l: [f64; 3]) -> [[f64; 2]; 6] {
        match self.family {
            Family::VectorP2 => p2_grads(&g.grad_l, l),
            _ => [g.grad_l[0], g.grad_l[1], g.grad_l[2], [0.0; 2], [0.0; 2], [0.0; 2]],
        }
    }

    /// Nodal interpolant of `f`, which returns one value per component.
    pub fn interpolate(self: &Arc<Self>, f: impl Fn([f64; 2]) -> Vec<f64>) -> FEField {
        let nc = self.family.components();
        let mut coeffs = vec![0.0; self.dof_count()];
        for (n, &x) in self.node_coords.iter().enumerate() {
            let v = f(x);
            coeffs[n * nc..(n + 1) * nc].copy_from_slice(&v[..nc]);
        }
        FEField::new(self.clone(), coeffs)
    }
}

/// Coefficients over a finite-element space.
#[derive(Debug, Clone)]
pub struct FEField {
    pub space: Arc<FESpace>,
    pub coeffs: Vec<f64>,
}

impl FEField {
    pub fn new(space: Arc<FESpace>, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), space.dof_count(), "coefficient length does not match space");
        Self { space, coeffs }
    }

    pub fn zeros(space: Arc<FESpace>) -> Self {
        let n = space.dof_count();
        Self { space, coeffs: vec![0.0; n] }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { space: self.space.clone(), coeffs: self.coeffs.iter().map(|c| s * c).collect() }
    }

    /// Values and gradients of every component at barycentric point `l` of
    /// triangle `t`; `grad[k][d]` = ∂_d of component k. Zero outside the support.
    pub fn eval(&self, t: usize, geom: &ElemGeom, l: [f64; 3]) -> ([f64; 4], [[f64; 2]; 4]) {
        let mut val = [0.0; 4];
        let mut grad = [[0.0; 2]; 4];
        let Some(nodes) = self.space.element_nodes(t) else {
            return (val, grad);
        };
        let nc = self.space.family.components();
        let (phi, _) = self.space.basis(l);
        let dphi = self.space.basis_grads(geom, l);
        for (a, &n) in nodes.iter().enumerate() {
            for k in 0..nc {
                let c = self.coeffs[n * nc + k];
                val[k] += c * phi[a];
                grad[k][0] += c * dphi[a][0];
                grad[k][1] += c * dphi[a][1];
            }
        }
        (val, grad)
    }

    /// Value of a vector field and its gradient `g[c][d] = ∂_d u^c`.
    pub fn eval_vector(&self, t: usize, geom: &ElemGeom, l: [f64; 3]) -> ([f64; 2], [[f64; 2]; 2]) {
        let (v, g) = self.eval(t, geom, l);
        ([v[0], v[1]], [g[0], g[1]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_unit_cell_mesh, InclusionShape};

    #[test]
    fn p2_basis_partition_of_unity_and_gradients() {
        let g = ElemGeom::new([[0.0, 0.0], [1.0, 0.0], [0.2, 0.7]]);
        for l in [[0.2, 0.3, 0.5], [1.0, 0.0, 0.0], [0.1, 0.6, 0.3]] {
            let v = p2_values(l);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let d = p2_grads(&g.grad_l, l);
            let s = d.iter().fold([0.0, 0.0], |a, x| [a[0] + x[0], a[1] + x[1]]);
            assert!(s[0].abs() < 1e-14 && s[1].abs() < 1e-14);
        }
    }

    #[test]
    fn periodic_space_identifies_faces() {
        let cell = build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), 0.125).unwrap();
        let free = FESpace::vector_p2(cell.mesh.clone());
        let per = FESpace::vector_p2_periodic(&cell);
        let n = cell.divisions;
        // each face loses n+1 vertex nodes... counted once: 2n vertex + 2n edge nodes removed, minus shared corner
        assert_eq!(free.n_nodes() - per.n_nodes(), 2 * n + 1 + 2 * n);
        for &(a, b) in &cell.periodic_pairs {
            assert_eq!(per.vertex_node(a), per.vertex_node(b));
        }
    }

    #[test]
    fn pressure_space_lives_on_fluid() {
        let cell = build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), 0.125).unwrap();
        let p = FESpace::pressure_p1(cell.mesh.clone());
        for t in 0..cell.mesh.n_triangles() {
            assert_eq!(p.element_nodes(t).is_some(), cell.mesh.phase[t] == Phase::Fluid);
        }
    }

    #[test]
    fn quadratic_interpolation_exact() {
        let cell = build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), 0.25).unwrap();
        let s = Arc::new(FESpace::vector_p2(cell.mesh.clone()));
        let f = s.interpolate(|x| vec![x[0] * x[1], x[0] * x[0] - 2.0 * x[1]]);
        for t in 0..cell.mesh.n_triangles() {
            let g = ElemGeom::new(cell.mesh.corners(t));
            let l = [0.2, 0.5, 0.3];
            let x = crate::fem::quadrature::bary_point(&cell.mesh.corners(t), l);
            let (v, d) = f.eval_vector(t, &g, l);
            assert!((v[0] - x[0] * x[1]).abs() < 1e-14);
            assert!((d[1][0] - 2.0 * x[0]).abs() < 1e-13);
            assert!((d[1][1] + 2.0).abs() < 1e-13);
        }
    }
}
