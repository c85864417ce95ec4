use super::mesh::TriMesh;

/// Uniform-bucket point locator over a triangulation.
#[derive(Debug, Clone)]
pub struct Locator {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

/// A located point: containing (or nearest) triangle and its barycentric
/// coordinates, which may fall slightly outside [0, 1] when extrapolating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub bary: [f64; 3],
    pub inside: bool,
}

impl Locator {
    pub fn new(mesh: &TriMesh) -> Self {
        let bb = mesh.bounding_box();
        let nt = mesh.n_triangles().max(1);
        let w = (bb[2] - bb[0]).max(1e-300);
        let hgt = (bb[3] - bb[1]).max(1e-300);
        let cell = (w * hgt / nt as f64).sqrt().max(1e-12) * 1.5;
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((hgt / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let origin = [bb[0], bb[1]];
        let idx = |x: f64, o: f64, n: usize| (((x - o) / cell).floor().max(0.0) as usize).min(n - 1);
        for t in 0..mesh.n_triangles() {
            let c = mesh.corners(t);
            let (x0, x1) = (
                c.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
                c.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
            );
            let (y0, y1) = (
                c.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
                c.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
            );
            for j in idx(y0, origin[1], ny)..=idx(y1, origin[1], ny) {
                for i in idx(x0, origin[0], nx)..=idx(x1, origin[0], nx) {
                    buckets[j * nx + i].push(t as u32);
                }
            }
        }
        Self { origin, cell, nx, ny, buckets }
    }

    fn bucket_of(&self, p: [f64; 2]) -> (i64, i64) {
        (((p[0] - self.origin[0]) / self.cell).floor() as i64, ((p[1] - self.origin[1]) / self.cell).floor() as i64)
    }

    /// The triangle containing `p` (tolerance `1e-12` in barycentric terms).
    pub fn locate(&self, mesh: &TriMesh, p: [f64; 2]) -> Option<Location> {
        let (i, j) = self.bucket_of(p);
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            return None;
        }
        let mut best: Option<Location> = None;
        for &t in &self.buckets[j as usize * self.nx + i as usize] {
            let b = barycentric(mesh, t as usize, p);
            let m = b[0].min(b[1]).min(b[2]);
            if m >= -1e-12 {
                let loc = Location { triangle: t as usize, bary: b, inside: true };
                if m >= 0.0 {
                    return Some(loc);
                }
                best.get_or_insert(loc);
            }
        }
        best
    }

    /// Like [`locate`](Self::locate), but falls back to the nearest triangle.
    pub fn locate_or_nearest(&self, mesh: &TriMesh, p: [f64; 2]) -> Location {
        if let Some(l) = self.locate(mesh, p) {
            return l;
        }
        let (ci, cj) = self.bucket_of(p);
        let ci = ci.clamp(0, self.nx as i64 - 1);
        let cj = cj.clamp(0, self.ny as i64 - 1);
        let mut best = (f64::INFINITY, 0usize);
        let max_ring = self.nx.max(self.ny) as i64;
        for ring in 0..=max_ring {
            for j in (cj - ring)..=(cj + ring) {
                for i in (ci - ring)..=(ci + ring) {
                    if (i - ci).abs() != ring && (j - cj).abs() != ring {
                        continue;
                    }
                    if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                        continue;
                    }
                    for &t in &self.buckets[j as usize * self.nx + i as usize] {
                        let d = triangle_distance(mesh, t as usize, p);
                        if d < best.0 || (d == best.0 && (t as usize) < best.1) {
                            best = (d, t as usize);
                        }
                    }
                }
            }
            // any triangle outside this ring is at least `ring * cell` away
            if best.0 < ring as f64 * self.cell {
                break;
            }
        }
        Location { triangle: best.1, bary: barycentric(mesh, best.1, p), inside: false }
    }
}

pub(crate) fn barycentric(mesh: &TriMesh, t: usize, p: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = mesh.corners(t);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn triangle_distance(mesh: &TriMesh, t: usize, p: [f64; 2]) -> f64 {
    let b = barycentric(mesh, t, p);
    if b.iter().all(|&x| x >= 0.0) {
        return 0.0;
    }
    let c = mesh.corners(t);
    (0..3).map(|k| super::cdt::segment_distance(p, c[k], c[(k + 1) % 3])).fold(f64::INFINITY, f64::min)
}
