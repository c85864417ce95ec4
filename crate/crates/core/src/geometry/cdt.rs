//! Constrained Delaunay triangulation of a point cloud with fixed edges.

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::{Error, Result};

/// Triangulates `points` keeping every `(a, b)` in `constraints` as a mesh edge.
///
/// Returns all triangles of the convex hull as counter-clockwise index
/// triples into `points`. Duplicate points are an error: callers own the
/// vertex numbering.
pub(crate) fn triangulate(points: &[[f64; 2]], constraints: &[(usize, usize)]) -> Result<Vec<[usize; 3]>> {
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut handles = Vec::with_capacity(points.len());
    for p in points {
        let h = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::MeshFailure(format!("point insertion failed: {e:?}")))?;
        handles.push(h);
    }
    if cdt.num_vertices() != points.len() {
        return Err(Error::MeshFailure("duplicate points handed to triangulator".into()));
    }
    let mut back = vec![usize::MAX; points.len()];
    for (i, h) in handles.iter().enumerate() {
        back[h.index()] = i;
    }
    for &(a, b) in constraints {
        if !cdt.can_add_constraint(handles[a], handles[b]) {
            return Err(Error::MeshFailure(format!(
                "constraint {:?}-{:?} crosses an existing constraint",
                points[a], points[b]
            )));
        }
        cdt.add_constraint(handles[a], handles[b]);
        if !cdt.exists_constraint(handles[a], handles[b]) {
            return Err(Error::MeshFailure(format!(
                "constraint {:?}-{:?} was split by a vertex lying on it",
                points[a], points[b]
            )));
        }
    }
    let mut tris = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| back[v.fix().index()]);
        tris.push([a, b, c]);
    }
    Ok(tris)
}

/// Distance from `p` to the segment `a`–`b`.
pub(crate) fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Distance from `p` to a closed polygon's boundary.
pub(crate) fn polygon_distance(poly: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| segment_distance(p, poly[i], poly[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_with_center() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let tris = triangulate(&pts, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(tris.len(), 4);
        let area: f64 = tris.iter().map(|t| crate::geometry::mesh::signed_area(&pts, *t).abs()).sum();
        assert!((area - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_points_rejected() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        assert!(triangulate(&pts, &[]).is_err());
    }
}
