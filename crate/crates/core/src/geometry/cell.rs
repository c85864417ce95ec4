use std::collections::HashMap;
use std::sync::Arc;

use super::cdt::{polygon_distance, triangulate};
use super::mesh::{edge_normal, point_in_polygon, InterfaceEdge, Phase, TriMesh};
use super::shapes::InclusionShape;
use crate::{Error, Result};

/// Triangulation of the unit cell Y = (-1/2, 1/2)² with the inclusion ω.
///
/// The boundary of Y carries `divisions` equal segments per side, so that
/// opposite faces have identical vertex positions and the mesh can be
/// tiled and identified periodically.
#[derive(Debug, Clone)]
pub struct CellMesh {
    pub mesh: Arc<TriMesh>,
    pub shape: InclusionShape,
    pub divisions: usize,
    /// Grid coordinates `(i, j)` in `0..=divisions` of the vertices on ∂Y.
    pub grid_key: Vec<Option<[usize; 2]>>,
    /// Involutive pairing of ∂Y vertices across opposite faces.
    pub periodic_pairs: Vec<(usize, usize)>,
    /// Vertices of the discrete ∂ω, counter-clockwise.
    pub inclusion_loop: Vec<usize>,
    key_index: HashMap<[usize; 2], usize>,
}

/// Builds the cell mesh with nominal size `h` (grid spacing of the fill points).
pub fn build_unit_cell_mesh(shape: InclusionShape, h: f64) -> Result<CellMesh> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::MeshFailure(format!("mesh size must be positive, got {h}")));
    }
    let n = ((1.0 / h) - 1e-9).ceil().max(2.0) as usize;
    CellMesh::with_divisions(shape, n)
}

impl CellMesh {
    /// Builds the cell mesh with `n` segments per side of ∂Y (h = 1/n).
    pub fn with_divisions(shape: InclusionShape, n: usize) -> Result<Self> {
        shape.validate()?;
        if n < 2 {
            return Err(Error::MeshFailure("need at least two divisions per side".into()));
        }
        let s = 1.0 / n as f64;
        let coord = |k: usize| -0.5 + k as f64 / n as f64;

        let mut points: Vec<[f64; 2]> = Vec::new();
        let mut grid_key = Vec::new();
        let mut constraints = Vec::new();

        // ∂Y, counter-clockwise from the lower-left corner.
        let mut keys = Vec::with_capacity(4 * n);
        for k in 0..n {
            keys.push([k, 0]);
        }
        for k in 0..n {
            keys.push([n, k]);
        }
        for k in 0..n {
            keys.push([n - k, n]);
        }
        for k in 0..n {
            keys.push([0, n - k]);
        }
        for key in &keys {
            points.push([coord(key[0]), coord(key[1])]);
            grid_key.push(Some(*key));
        }
        for k in 0..4 * n {
            constraints.push((k, (k + 1) % (4 * n)));
        }

        // ∂ω
        let poly = shape.boundary_polygon(s);
        let first = points.len();
        for p in &poly {
            points.push(*p);
            grid_key.push(None);
        }
        let m = poly.len();
        for k in 0..m {
            constraints.push((first + k, first + (k + 1) % m));
        }
        let inclusion_loop: Vec<usize> = (first..first + m).collect();

        // Interior fill on the background grid, kept clear of ∂ω.
        for j in 1..n {
            for i in 1..n {
                let p = [coord(i), coord(j)];
                if polygon_distance(&poly, p) >= 0.5 * s {
                    points.push(p);
                    grid_key.push(None);
                }
            }
        }

        let tris = triangulate(&points, &constraints)?;
        let phase: Vec<Phase> = tris
            .iter()
            .map(|t| {
                let c = centroid(&points, *t);
                if point_in_polygon(&poly, c) {
                    Phase::Fluid
                } else {
                    Phase::Elastic
                }
            })
            .collect();
        let interface_edges = (0..m)
            .map(|k| {
                let (a, b) = (first + k, first + (k + 1) % m);
                InterfaceEdge { a, b, normal: edge_normal(points[a], points[b]) }
            })
            .collect();
        let mesh = Arc::new(TriMesh::new(points, tris, phase, interface_edges));
        check_nondegenerate(&mesh, s)?;

        let mut key_index = HashMap::new();
        for (v, k) in grid_key.iter().enumerate() {
            if let Some(k) = k {
                key_index.insert(*k, v);
            }
        }
        // The four corners share one key class; the left/bottom faces own the pair.
        let mut periodic_pairs = Vec::new();
        for j in 0..=n {
            periodic_pairs.push((key_index[&[0, j]], key_index[&[n, j]]));
        }
        for i in 1..n {
            periodic_pairs.push((key_index[&[i, 0]], key_index[&[i, n]]));
        }

        Ok(Self { mesh, shape, divisions: n, grid_key, periodic_pairs, inclusion_loop, key_index })
    }

    /// The vertex with grid key `(i, j)` on ∂Y.
    pub fn boundary_vertex(&self, key: [usize; 2]) -> Option<usize> {
        self.key_index.get(&key).copied()
    }

    /// The partner of a ∂Y vertex under the periodic pairing.
    pub fn periodic_partner(&self, v: usize) -> Option<usize> {
        self.periodic_pairs.iter().find_map(|&(a, b)| {
            if a == v {
                Some(b)
            } else if b == v {
                Some(a)
            } else {
                None
            }
        })
    }

    /// Canonical representative of the periodic class of vertex `v`.
    pub fn periodic_master(&self, v: usize) -> usize {
        match self.grid_key[v] {
            Some([i, j]) => {
                let n = self.divisions;
                self.key_index[&[i % n, j % n]]
            }
            None => v,
        }
    }

    /// For an edge lying on the right or top face of ∂Y, the matching edge on
    /// the opposite face. Other edges are their own representatives.
    pub fn periodic_edge_image(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        let n = self.divisions;
        let (ka, kb) = (self.grid_key[a]?, self.grid_key[b]?);
        if ka[0] == n && kb[0] == n {
            Some((self.key_index[&[0, ka[1]]], self.key_index[&[0, kb[1]]]))
        } else if ka[1] == n && kb[1] == n {
            Some((self.key_index[&[ka[0], 0]], self.key_index[&[kb[0], 0]]))
        } else {
            None
        }
    }

    /// Largest distance between the discrete ∂ω and the analytic boundary,
    /// measured at chord midpoints.
    pub fn max_chord_error(&self) -> f64 {
        let c = self.shape.center;
        let l = &self.inclusion_loop;
        (0..l.len())
            .map(|k| {
                let p = self.mesh.vertices[l[k]];
                let q = self.mesh.vertices[l[(k + 1) % l.len()]];
                let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                match self.shape.kind {
                    super::ShapeKind::Disk => self.shape.size - (m[0] - c[0]).hypot(m[1] - c[1]),
                    super::ShapeKind::Square => 0.0,
                }
            })
            .fold(0.0, f64::max)
    }
}

fn centroid(points: &[[f64; 2]], t: [usize; 3]) -> [f64; 2] {
    let [a, b, c] = t.map(|i| points[i]);
    [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
}

pub(crate) fn check_nondegenerate(mesh: &TriMesh, s: f64) -> Result<()> {
    for t in 0..mesh.n_triangles() {
        if mesh.area(t) <= 1e-10 * s * s {
            return Err(Error::MeshFailure(format!("degenerate triangle {t} with area {:e}", mesh.area(t))));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_cell_area_and_fluid_area() {
        let m = build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), 0.1).unwrap();
        assert!((m.mesh.total_area() - 1.0).abs() < 1e-12);
        let h = 0.1;
        assert!((m.mesh.fluid_area() - PI / 16.0).abs() < 2.0 * h * h);
    }

    #[test]
    fn square_cell_fluid_area_exact() {
        let m = build_unit_cell_mesh(InclusionShape::square([0.0, 0.0], 0.25), 0.25).unwrap();
        assert!((m.mesh.fluid_area() - 0.25).abs() < 1e-14);
        assert!((m.mesh.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_disk_rejected() {
        let r = build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.5), 0.1);
        assert!(matches!(r, Err(Error::InvalidShape(_))));
    }

    #[test]
    fn periodic_pairs_are_an_involution_by_unit_shifts() {
        let m = build_unit_cell_mesh(InclusionShape::disk([0.05, -0.02], 0.2), 1.0 / 12.0).unwrap();
        let n_boundary = m.grid_key.iter().filter(|k| k.is_some()).count();
        let mut seen = vec![0usize; m.mesh.n_vertices()];
        for &(a, b) in &m.periodic_pairs {
            seen[a] += 1;
            seen[b] += 1;
            let (p, q) = (m.mesh.vertices[a], m.mesh.vertices[b]);
            let d = [q[0] - p[0], q[1] - p[1]];
            assert!(d == [1.0, 0.0] || d == [0.0, 1.0], "shift {d:?}");
            assert_eq!(m.periodic_partner(m.periodic_partner(a).unwrap()), Some(a));
        }
        assert_eq!(seen.iter().filter(|&&c| c == 1).count(), n_boundary);
        assert!(seen.iter().all(|&c| c <= 1));
    }

    #[test]
    fn interface_edges_separate_phases() {
        let m = build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), 1.0 / 16.0).unwrap();
        let mut edge_tris: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in m.mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_tris.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        for e in &m.mesh.interface_edges {
            let ts = &edge_tris[&(e.a.min(e.b), e.a.max(e.b))];
            assert_eq!(ts.len(), 2);
            let phases: Vec<Phase> = ts.iter().map(|&t| m.mesh.phase[t]).collect();
            assert!(phases.contains(&Phase::Fluid) && phases.contains(&Phase::Elastic));
        }
        // closed loop
        let l = &m.mesh.interface_edges;
        for k in 0..l.len() {
            assert_eq!(l[k].b, l[(k + 1) % l.len()].a);
        }
    }

    #[test]
    fn halving_h_shrinks_chord_error() {
        let s = InclusionShape::disk([0.0, 0.0], 0.25);
        let mut prev = f64::INFINITY;
        for n in [8, 16, 32, 64] {
            let e = CellMesh::with_divisions(s, n).unwrap().max_chord_error();
            assert!(e <= 0.5 * prev, "{e} vs {prev}");
            prev = e;
        }
    }
}
