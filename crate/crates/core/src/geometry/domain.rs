use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::sync::Arc;

use super::cdt::{polygon_distance, triangulate};
use super::cell::{check_nondegenerate, CellMesh};
use super::mesh::{edge_normal, BoundaryEdge, InterfaceEdge, Phase, TriMesh};
use super::shapes::{DomainShape, InclusionShape, ShapeKind};
use crate::{Error, Result};

/// Triangulation of Ω carrying the ε-periodic inclusion set D_ε.
///
/// Each lattice cell ε(n + Y) is an affine copy of [`DomainMesh::cell`]; the
/// region between the union of lattice cells and ∂Ω is meshed separately and
/// is purely elastic.
#[derive(Debug, Clone)]
pub struct DomainMesh {
    pub mesh: Arc<TriMesh>,
    pub domain: DomainShape,
    /// Period of the inclusion array; `0.0` for a plain mesh without tiling.
    pub eps: f64,
    pub lattice: Vec<[i64; 2]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub vertex_boundary_distance: Vec<f64>,
    /// The cell mesh every lattice tile is copied from.
    pub cell: Option<Arc<CellMesh>>,
    /// `(lattice index, cell triangle)` for tile triangles, `None` in the boundary strip.
    pub triangle_tile: Vec<Option<(usize, usize)>>,
}

impl DomainMesh {
    pub fn n_fluid_triangles(&self) -> usize {
        self.mesh.phase.iter().filter(|&&p| p == Phase::Fluid).count()
    }

    /// Marks this mesh as violating the smooth-boundary assumption.
    pub fn is_conforming(&self) -> bool {
        self.domain.is_conforming()
    }
}

/// Lattice points n with ε(n + closure(Y)) ⊂ Ω, ordered row by row.
pub fn enumerate_lattice(domain: &DomainShape, eps: f64) -> Vec<[i64; 2]> {
    if !(eps > 0.0) {
        return Vec::new();
    }
    let m = (domain.size / eps).ceil() as i64 + 1;
    let mut out = Vec::new();
    for ny in -m..=m {
        for nx in -m..=m {
            if cell_inside(domain, eps, [nx, ny]) {
                out.push([nx, ny]);
            }
        }
    }
    out
}

fn cell_inside(domain: &DomainShape, eps: f64, n: [i64; 2]) -> bool {
    let c = [eps * n[0] as f64, eps * n[1] as f64];
    let offsets: &[[f64; 2]] =
        &[[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5], [0.0, -0.5], [0.5, 0.0], [0.0, 0.5], [-0.5, 0.0]];
    offsets.iter().all(|o| domain.contains_strict([c[0] + eps * o[0], c[1] + eps * o[1]]))
}

/// Exact distance to ∂Ω at every mesh vertex.
pub fn boundary_distance(mesh: &DomainMesh) -> Vec<f64> {
    mesh.mesh.vertices.iter().map(|&x| mesh.domain.distance_to_boundary(x)).collect()
}

/// Builds the ε-domain mesh; tiles use a cell mesh with `ceil(eps/h)` divisions.
pub fn build_domain_mesh(domain: DomainShape, eps: f64, shape: InclusionShape, h: f64) -> Result<DomainMesh> {
    domain.validate()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(h > 0.0) || h > 0.25 * eps * (1.0 + 1e-12) {
        return Err(Error::ResolutionError(format!(
            "h = {h} does not resolve inclusions of period {eps} (need h <= eps/4)"
        )));
    }
    let n = ((eps / h) - 1e-9).ceil() as usize;
    let cell = Arc::new(CellMesh::with_divisions(shape, n)?);
    build_domain_mesh_with_cell(domain, eps, cell)
}

/// Builds the ε-domain mesh by tiling the given cell mesh.
pub fn build_domain_mesh_with_cell(domain: DomainShape, eps: f64, cell: Arc<CellMesh>) -> Result<DomainMesh> {
    domain.validate()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("eps must lie in (0, 1), got {eps}")));
    }
    let n = cell.divisions;
    let s = eps / n as f64;
    let lattice = enumerate_lattice(&domain, eps);
    let in_lattice: HashSet<[i64; 2]> = lattice.iter().copied().collect();

    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut triangles = Vec::new();
    let mut phase = Vec::new();
    let mut triangle_tile = Vec::new();
    let mut interface_edges = Vec::new();
    let mut keyed: HashMap<[i64; 2], usize> = HashMap::new();
    let grid = |k: i64| eps * (k as f64 / n as f64 - 0.5);

    // Tiles, with ∂Y vertices merged through their global grid key.
    for (li, &nl) in lattice.iter().enumerate() {
        let mut map = Vec::with_capacity(cell.mesh.n_vertices());
        for (v, y) in cell.mesh.vertices.iter().enumerate() {
            let g = match cell.grid_key[v] {
                Some([i, j]) => {
                    let key = [nl[0] * n as i64 + i as i64, nl[1] * n as i64 + j as i64];
                    *keyed.entry(key).or_insert_with(|| {
                        vertices.push([grid(key[0]), grid(key[1])]);
                        vertices.len() - 1
                    })
                }
                None => {
                    vertices.push([eps * (nl[0] as f64 + y[0]), eps * (nl[1] as f64 + y[1])]);
                    vertices.len() - 1
                }
            };
            map.push(g);
        }
        for (ct, tri) in cell.mesh.triangles.iter().enumerate() {
            triangles.push(tri.map(|v| map[v]));
            phase.push(cell.mesh.phase[ct]);
            triangle_tile.push(Some((li, ct)));
        }
        for e in &cell.mesh.interface_edges {
            interface_edges.push(InterfaceEdge { a: map[e.a], b: map[e.b], normal: e.normal });
        }
    }

    // Staircase: tile boundary segments owned by exactly one tile.
    let n_i = n as i64;
    let boundary_keys = |nl: [i64; 2]| -> Vec<[i64; 2]> {
        let (ox, oy) = (nl[0] * n_i, nl[1] * n_i);
        let mut ks = Vec::with_capacity(4 * n);
        for k in 0..n_i {
            ks.push([ox + k, oy]);
        }
        for k in 0..n_i {
            ks.push([ox + n_i, oy + k]);
        }
        for k in 0..n_i {
            ks.push([ox + n_i - k, oy + n_i]);
        }
        for k in 0..n_i {
            ks.push([ox, oy + n_i - k]);
        }
        ks
    };
    let mut seg_count: HashMap<([i64; 2], [i64; 2]), usize> = HashMap::new();
    let sorted = |a: [i64; 2], b: [i64; 2]| if a < b { (a, b) } else { (b, a) };
    for &nl in &lattice {
        let ks = boundary_keys(nl);
        for k in 0..ks.len() {
            *seg_count.entry(sorted(ks[k], ks[(k + 1) % ks.len()])).or_default() += 1;
        }
    }
    let mut stair_nodes: Vec<usize> = Vec::new();
    let mut stair_local: HashMap<usize, usize> = HashMap::new();
    let mut stair_edges = Vec::new();
    for &nl in &lattice {
        let ks = boundary_keys(nl);
        for k in 0..ks.len() {
            let (a, b) = (ks[k], ks[(k + 1) % ks.len()]);
            if seg_count[&sorted(a, b)] == 1 {
                let mut local = |g: usize| {
                    *stair_local.entry(g).or_insert_with(|| {
                        stair_nodes.push(g);
                        stair_nodes.len() - 1
                    })
                };
                let la = local(keyed[&a]);
                let lb = local(keyed[&b]);
                stair_edges.push((la, lb));
            }
        }
    }

    // Outer polygon; near-boundary staircase nodes get their projection inserted.
    let near: Vec<[f64; 2]> =
        stair_nodes.iter().map(|&g| vertices[g]).filter(|&p| domain.distance_to_boundary(p) < 0.5 * s).collect();
    let poly = outer_polygon(&domain, s, &near);

    // Fill points on the lattice-aligned grid of spacing s.
    let inside_union = |k: [i64; 2]| -> bool {
        let cx = [k[0].div_euclid(n_i), (k[0] - 1).div_euclid(n_i)];
        let cy = [k[1].div_euclid(n_i), (k[1] - 1).div_euclid(n_i)];
        cx.iter().any(|&x| cy.iter().any(|&y| in_lattice.contains(&[x, y])))
    };
    let kmax = ((domain.size / eps + 0.5) * n as f64).ceil() as i64 + 1;
    let kmin = -(((domain.size / eps - 0.5) * n as f64).ceil() as i64) - 1;
    let mut fill = Vec::new();
    for ky in kmin..=kmax {
        for kx in kmin..=kmax {
            let p = [grid(kx), grid(ky)];
            if !domain.contains_strict(p) || polygon_distance(&poly, p) < 0.5 * s {
                continue;
            }
            if !lattice.is_empty() && inside_union([kx, ky]) {
                continue;
            }
            fill.push(p);
        }
    }

    let mut points: Vec<[f64; 2]> = stair_nodes.iter().map(|&g| vertices[g]).collect();
    let poly_first = points.len();
    points.extend_from_slice(&poly);
    points.extend_from_slice(&fill);
    let mut constraints = stair_edges.clone();
    let m = poly.len();
    for k in 0..m {
        constraints.push((poly_first + k, poly_first + (k + 1) % m));
    }
    let strip = triangulate(&points, &constraints)?;

    let mut to_global: Vec<usize> = stair_nodes.clone();
    for p in &points[poly_first..] {
        vertices.push(*p);
        to_global.push(vertices.len() - 1);
    }
    for t in strip {
        let c = [
            (points[t[0]][0] + points[t[1]][0] + points[t[2]][0]) / 3.0,
            (points[t[0]][1] + points[t[1]][1] + points[t[2]][1]) / 3.0,
        ];
        let cellidx = [(c[0] / eps + 0.5).floor() as i64, (c[1] / eps + 0.5).floor() as i64];
        if in_lattice.contains(&cellidx) {
            continue;
        }
        triangles.push(t.map(|v| to_global[v]));
        phase.push(Phase::Elastic);
        triangle_tile.push(None);
    }

    let boundary_edges: Vec<BoundaryEdge> = (0..m)
        .map(|k| {
            let (a, b) = (to_global[poly_first + k], to_global[poly_first + (k + 1) % m]);
            BoundaryEdge { a, b, normal: edge_normal(vertices[a], vertices[b]) }
        })
        .collect();
    let on_boundary: HashSet<usize> = boundary_edges.iter().map(|e| e.a).collect();

    let mesh = Arc::new(TriMesh::new(vertices, triangles, phase, interface_edges));
    check_nondegenerate(&mesh, s)?;
    let vertex_boundary_distance = mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(v, &x)| if on_boundary.contains(&v) { 0.0 } else { domain.distance_to_boundary(x) })
        .collect();
    Ok(DomainMesh {
        mesh,
        domain,
        eps,
        lattice,
        boundary_edges,
        vertex_boundary_distance,
        cell: Some(cell),
        triangle_tile,
    })
}

/// Builds a mesh of Ω without inclusions on a grid of spacing `h`.
pub fn build_plain_domain_mesh(domain: DomainShape, h: f64) -> Result<DomainMesh> {
    domain.validate()?;
    if !(h > 0.0) || h > domain.size {
        return Err(Error::ResolutionError(format!("mesh size {h} is not usable for {domain:?}")));
    }
    let poly = outer_polygon(&domain, h, &[]);
    let k = (domain.size / h).ceil() as i64 + 1;
    let mut points = poly.clone();
    for ky in -k..=k {
        for kx in -k..=k {
            let p = [kx as f64 * h, ky as f64 * h];
            if domain.contains_strict(p) && polygon_distance(&poly, p) >= 0.5 * h {
                points.push(p);
            }
        }
    }
    let m = poly.len();
    let constraints: Vec<(usize, usize)> = (0..m).map(|k| (k, (k + 1) % m)).collect();
    let tris = triangulate(&points, &constraints)?;
    let nt = tris.len();
    let boundary_edges =
        constraints.iter().map(|&(a, b)| BoundaryEdge { a, b, normal: edge_normal(points[a], points[b]) }).collect();
    let mesh = Arc::new(TriMesh::new(points, tris, vec![Phase::Elastic; nt], Vec::new()));
    check_nondegenerate(&mesh, h)?;
    let vertex_boundary_distance = (0..mesh.n_vertices())
        .map(|v| if v < m { 0.0 } else { domain.distance_to_boundary(mesh.vertices[v]) })
        .collect();
    Ok(DomainMesh {
        mesh,
        domain,
        eps: 0.0,
        lattice: Vec::new(),
        boundary_edges,
        vertex_boundary_distance,
        cell: None,
        triangle_tile: vec![None; nt],
    })
}

/// Counter-clockwise polygon on ∂Ω. For the disk, the radial projections of
/// `near` are inserted so those points end up strictly inside the polygon.
fn outer_polygon(domain: &DomainShape, s: f64, near: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let base = domain.boundary_polygon(s);
    if domain.kind == ShapeKind::Square || near.is_empty() {
        return base;
    }
    let r = domain.size;
    let angle = |p: [f64; 2]| p[1].atan2(p[0]).rem_euclid(2.0 * PI);
    let mut pinned: Vec<f64> = near.iter().map(|&p| angle(p)).collect();
    pinned.sort_by(f64::total_cmp);
    pinned.dedup_by(|a, b| (*a - *b).abs() * r < 1e-9 * s);
    let gap = 0.5 * s / r;
    let ang_dist = |a: f64, b: f64| {
        let d = (a - b).abs();
        d.min(2.0 * PI - d)
    };
    let mut all: Vec<(f64, [f64; 2])> = base
        .into_iter()
        .map(|p| (angle(p), p))
        .filter(|(a, _)| pinned.iter().all(|&q| ang_dist(*a, q) >= gap))
        .collect();
    all.extend(pinned.iter().map(|&a| (a, [r * a.cos(), r * a.sin()])));
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    all.into_iter().map(|(_, p)| p).collect()
}
