//! Plain-text `MESH2D v1` mesh files.

use std::io::{BufRead, Write};

use super::cell::CellMesh;
use super::domain::DomainMesh;
use super::mesh::Phase;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Interface,
    Outer,
    /// Index of the matching edge on the opposite face of ∂Y.
    Periodic(usize),
}

/// Flat, format-level view of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub dist: Vec<f64>,
    pub triangles: Vec<[usize; 3]>,
    pub phase: Vec<Phase>,
    pub edges: Vec<(usize, usize, EdgeKind)>,
}

impl MeshFile {
    /// Cell mesh; `dist` is the distance to ∂Y.
    pub fn from_cell(cell: &CellMesh) -> Self {
        let m = &cell.mesh;
        let dist = m.vertices.iter().map(|y| (0.5 - y[0].abs()).min(0.5 - y[1].abs()).max(0.0)).collect();
        let mut edges: Vec<(usize, usize, EdgeKind)> =
            m.interface_edges.iter().map(|e| (e.a, e.b, EdgeKind::Interface)).collect();
        let n = cell.divisions;
        let k = |i: usize, j: usize| cell.boundary_vertex([i, j]).expect("boundary key");
        let base = edges.len();
        type Face<'a> = Box<dyn Fn(usize) -> (usize, usize) + 'a>;
        let faces: [Face; 4] = [
            Box::new(|i| (k(i, 0), k(i + 1, 0))),
            Box::new(|i| (k(i, n), k(i + 1, n))),
            Box::new(|j| (k(0, j), k(0, j + 1))),
            Box::new(|j| (k(n, j), k(n, j + 1))),
        ];
        for (f, face) in faces.iter().enumerate() {
            let partner_face = f ^ 1;
            for s in 0..n {
                let (a, b) = face(s);
                edges.push((a, b, EdgeKind::Periodic(base + partner_face * n + s)));
            }
        }
        Self { vertices: m.vertices.clone(), dist, triangles: m.triangles.clone(), phase: m.phase.clone(), edges }
    }

    pub fn from_domain(d: &DomainMesh) -> Self {
        let m = &d.mesh;
        let mut edges: Vec<(usize, usize, EdgeKind)> =
            m.interface_edges.iter().map(|e| (e.a, e.b, EdgeKind::Interface)).collect();
        edges.extend(d.boundary_edges.iter().map(|e| (e.a, e.b, EdgeKind::Outer)));
        Self {
            vertices: m.vertices.clone(),
            dist: d.vertex_boundary_distance.clone(),
            triangles: m.triangles.clone(),
            phase: m.phase.clone(),
            edges,
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "MESH2D v1")?;
        writeln!(w, "{} {} {}", self.vertices.len(), self.triangles.len(), self.edges.len())?;
        for (v, d) in self.vertices.iter().zip(&self.dist) {
            writeln!(w, "{:.16e} {:.16e} {:.16e}", v[0], v[1], d)?;
        }
        for (t, p) in self.triangles.iter().zip(&self.phase) {
            let tag = match p {
                Phase::Elastic => 0,
                Phase::Fluid => 1,
            };
            writeln!(w, "{} {} {} {}", t[0], t[1], t[2], tag)?;
        }
        for (a, b, kind) in &self.edges {
            match kind {
                EdgeKind::Interface => writeln!(w, "{a} {b} interface")?,
                EdgeKind::Outer => writeln!(w, "{a} {b} outer")?,
                EdgeKind::Periodic(p) => writeln!(w, "{a} {b} periodic:{p}")?,
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("unexpected end of file reading {what}")))?
                .map_err(Error::from)
        };
        let header = next("header")?;
        if header.trim() != "MESH2D v1" {
            return Err(Error::Parse(format!("bad header {header:?}")));
        }
        let counts = parse_all::<usize>(&next("counts")?, 3)?;
        let (nv, nt, ne) = (counts[0], counts[1], counts[2]);
        let mut vertices = Vec::with_capacity(nv);
        let mut dist = Vec::with_capacity(nv);
        for _ in 0..nv {
            let f = parse_all::<f64>(&next("vertex")?, 3)?;
            vertices.push([f[0], f[1]]);
            dist.push(f[2]);
        }
        let mut triangles = Vec::with_capacity(nt);
        let mut phase = Vec::with_capacity(nt);
        for _ in 0..nt {
            let f = parse_all::<usize>(&next("triangle")?, 4)?;
            if f[..3].iter().any(|&i| i >= nv) {
                return Err(Error::Parse(format!("triangle index out of range: {f:?}")));
            }
            triangles.push([f[0], f[1], f[2]]);
            phase.push(match f[3] {
                0 => Phase::Elastic,
                1 => Phase::Fluid,
                t => return Err(Error::Parse(format!("unknown triangle tag {t}"))),
            });
        }
        let mut edges = Vec::with_capacity(ne);
        for _ in 0..ne {
            let line = next("edge")?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse(format!("bad edge line {line:?}")));
            }
            let a = parse_one::<usize>(parts[0])?;
            let b = parse_one::<usize>(parts[1])?;
            let kind = match parts[2] {
                "interface" => EdgeKind::Interface,
                "outer" => EdgeKind::Outer,
                s => match s.strip_prefix("periodic:") {
                    Some(p) => EdgeKind::Periodic(parse_one(p)?),
                    None => return Err(Error::Parse(format!("unknown edge kind {s:?}"))),
                },
            };
            edges.push((a, b, kind));
        }
        Ok(Self { vertices, dist, triangles, phase, edges })
    }
}

fn parse_one<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("cannot parse {s:?}")))
}

fn parse_all<T: std::str::FromStr>(line: &str, n: usize) -> Result<Vec<T>> {
    let v: Vec<T> = line.split_whitespace().map(parse_one).collect::<Result<_>>()?;
    if v.len() != n {
        return Err(Error::Parse(format!("expected {n} fields in {line:?}")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_unit_cell_mesh, InclusionShape};

    #[test]
    fn cell_mesh_round_trip() {
        let c = build_unit_cell_mesh(InclusionShape::disk([0.02, 0.0], 0.25), 0.125).unwrap();
        let f = MeshFile::from_cell(&c);
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        let g = MeshFile::read(&buf[..]).unwrap();
        assert_eq!(f, g);
        // periodic partners are mutual and shifted by one lattice vector
        for (i, &(a, b, k)) in g.edges.iter().enumerate() {
            if let EdgeKind::Periodic(p) = k {
                let (pa, pb, pk) = g.edges[p];
                assert_eq!(pk, EdgeKind::Periodic(i));
                let d = [g.vertices[pa][0] - g.vertices[a][0], g.vertices[pa][1] - g.vertices[a][1]];
                assert_eq!(d[0].abs() + d[1].abs(), 1.0);
                assert_eq!([g.vertices[pb][0] - g.vertices[b][0], g.vertices[pb][1] - g.vertices[b][1]], d);
            }
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(MeshFile::read(&b"MESH2D v2\n"[..]).is_err());
        assert!(MeshFile::read(&b"MESH2D v1\n1 0 0\n0 0\n"[..]).is_err());
    }
}
