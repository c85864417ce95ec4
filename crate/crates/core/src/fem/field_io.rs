//! `FIELD v1` coefficient dumps.

use std::io::{BufRead, Write};
use std::sync::Arc;

use super::space::{FEField, FESpace, Family};
use crate::{Error, Result};

pub fn write_field<W: Write>(f: &FEField, mut w: W) -> Result<()> {
    writeln!(w, "FIELD v1")?;
    writeln!(w, "{}", f.space.family.tag())?;
    writeln!(w, "{}", f.coeffs.len())?;
    for c in &f.coeffs {
        writeln!(w, "{c:.16e}")?;
    }
    Ok(())
}

/// Reads a dump into `space`, checking family and dof count.
pub fn read_field<R: BufRead>(space: Arc<FESpace>, r: R) -> Result<FEField> {
    let (family, coeffs) = read_raw(r)?;
    if family != space.family {
        return Err(Error::MeshMismatch(format!(
            "field of family {} read into {} space",
            family.tag(),
            space.family.tag()
        )));
    }
    if coeffs.len() != space.dof_count() {
        return Err(Error::MeshMismatch(format!("field has {} dofs, space has {}", coeffs.len(), space.dof_count())));
    }
    Ok(FEField::new(space, coeffs))
}

pub fn read_raw<R: BufRead>(r: R) -> Result<(Family, Vec<f64>)> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        Ok(lines.next().ok_or_else(|| Error::Parse("truncated field file".into()))??.trim().to_string())
    };
    if next()? != "FIELD v1" {
        return Err(Error::Parse("bad field header".into()));
    }
    let tag = next()?;
    let family = Family::from_tag(&tag).ok_or_else(|| Error::Parse(format!("unknown family {tag:?}")))?;
    let n: usize = next()?.parse().map_err(|_| Error::Parse("bad dof count".into()))?;
    let mut coeffs = Vec::with_capacity(n);
    for _ in 0..n {
        let s = next()?;
        coeffs.push(s.parse().map_err(|_| Error::Parse(format!("bad coefficient {s:?}")))?);
    }
    Ok((family, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_unit_cell_mesh, InclusionShape};

    #[test]
    fn round_trip_is_bit_exact() {
        let cell = build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), 0.25).unwrap();
        let s = Arc::new(FESpace::vector_p2(cell.mesh.clone()));
        let f = s.interpolate(|x| vec![x[0].sin() / 3.0, x[1].exp() * 1e-7]);
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let g = read_field(s.clone(), &buf[..]).unwrap();
        assert_eq!(f.coeffs, g.coeffs);
        let p = Arc::new(FESpace::pressure_p1(cell.mesh.clone()));
        assert!(matches!(read_field(p, &buf[..]), Err(Error::MeshMismatch(_))));
    }
}
