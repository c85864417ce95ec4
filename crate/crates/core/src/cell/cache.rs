//! On-disk corrector cache: `chi_{i}{j}.field`, `r_{i}{j}.field`, `cell_meta.json`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::problem::{CellSolveDiagnostics, INDEX_PAIRS};
use super::set::CellCorrectorSet;
use crate::fem::{read_field, write_field, FEField, FESpace, MaterialParams};
use crate::geometry::{CellMesh, InclusionShape};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellMeta {
    pub key: String,
    pub shape: InclusionShape,
    pub h: f64,
    pub params: MaterialParams,
    pub divisions: usize,
    pub n_displacement_dofs: usize,
    pub n_pressure_dofs: usize,
    pub diagnostics: Vec<CellSolveDiagnostics>,
    pub inf_sup: Option<f64>,
}

/// Directory name identifying (shape, h, λ, μ, μ̃); exact in every float.
pub fn cache_key(shape: &InclusionShape, h: f64, params: &MaterialParams) -> String {
    let kind = match shape.kind {
        crate::geometry::ShapeKind::Disk => "disk",
        crate::geometry::ShapeKind::Square => "square",
    };
    format!(
        "{kind}_{:e}_{:e}_{:e}_h{:e}_l{:e}_m{:e}_mt{:e}",
        shape.center[0], shape.center[1], shape.size, h, params.lambda, params.mu, params.mu_tilde
    )
}

fn names(i: usize, j: usize) -> (String, String) {
    (format!("chi_{}{}.field", i + 1, j + 1), format!("r_{}{}.field", i + 1, j + 1))
}

pub fn save_correctors(set: &CellCorrectorSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, (i, j)) in INDEX_PAIRS.iter().enumerate() {
        let (c, r) = names(*i, *j);
        write_field(&set.chi_fields()[k], BufWriter::new(File::create(dir.join(c))?))?;
        write_field(&set.r_fields()[k], BufWriter::new(File::create(dir.join(r))?))?;
    }
    let meta = CellMeta {
        key: cache_key(&set.cell.shape, set.h, &set.params),
        shape: set.cell.shape,
        h: set.h,
        params: set.params,
        divisions: set.cell.divisions,
        n_displacement_dofs: set.u_space.dof_count(),
        n_pressure_dofs: set.p_space.dof_count(),
        diagnostics: set.diagnostics.clone(),
        inf_sup: set.inf_sup,
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("cell_meta.json"))?), &meta)?;
    Ok(())
}

/// Loads a cached set built on `cell`; `Ok(None)` when nothing is cached under `dir`.
pub fn load_correctors(
    dir: &Path,
    cell: Arc<CellMesh>,
    params: &MaterialParams,
    h: f64,
) -> Result<Option<CellCorrectorSet>> {
    let meta_path = dir.join("cell_meta.json");
    if !meta_path.exists() {
        return Ok(None);
    }
    let meta: CellMeta = serde_json::from_reader(BufReader::new(File::open(meta_path)?))?;
    if meta.key != cache_key(&cell.shape, h, params) || meta.divisions != cell.divisions {
        return Err(Error::MeshMismatch(format!("cache at {} belongs to {}", dir.display(), meta.key)));
    }
    let u = Arc::new(FESpace::vector_p2_periodic(&cell));
    let p = Arc::new(FESpace::pressure_p1(cell.mesh.clone()));
    let mut chi: Vec<FEField> = Vec::new();
    let mut r: Vec<FEField> = Vec::new();
    for (i, j) in INDEX_PAIRS {
        let (cn, rn) = names(i, j);
        chi.push(read_field(u.clone(), BufReader::new(File::open(dir.join(cn))?))?);
        r.push(read_field(p.clone(), BufReader::new(File::open(dir.join(rn))?))?);
    }
    let arr = |v: Vec<FEField>| -> [FEField; 3] { v.try_into().unwrap_or_else(|_| unreachable!()) };
    Ok(Some(CellCorrectorSet::from_parts(cell, *params, h, arr(chi), arr(r), meta.diagnostics, meta.inf_sup)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_unit_cell_mesh;

    #[test]
    fn round_trip_is_bit_exact() {
        let shape = InclusionShape::disk([0.0, 0.0], 0.25);
        let h = 1.0 / 8.0;
        let params = MaterialParams::new(1.0, 1.0, 1.0).unwrap();
        let cell = Arc::new(build_unit_cell_mesh(shape, h).unwrap());
        let set = CellCorrectorSet::solve(cell.clone(), params, h, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(load_correctors(dir.path(), cell.clone(), &params, h).unwrap().is_none());
        save_correctors(&set, dir.path()).unwrap();
        let back = load_correctors(dir.path(), cell.clone(), &params, h).unwrap().unwrap();
        for (i, j) in INDEX_PAIRS {
            assert_eq!(back.chi(i, j).coeffs, set.chi(i, j).coeffs);
            assert_eq!(back.r(i, j).coeffs, set.r(i, j).coeffs);
        }
        assert!(dir.path().join("chi_12.field").exists());
        let other = MaterialParams::new(2.0, 1.0, 1.0).unwrap();
        assert!(matches!(load_correctors(dir.path(), cell, &other, h), Err(Error::MeshMismatch(_))));
    }

    #[test]
    fn key_distinguishes_parameters() {
        let s = InclusionShape::disk([0.0, 0.0], 0.25);
        let p = MaterialParams::new(1.0, 1.0, 1.0).unwrap();
        let q = MaterialParams::new(1.0, 1.0, 1.0 + 1e-15).unwrap();
        assert_ne!(cache_key(&s, 0.1, &p), cache_key(&s, 0.1, &q));
    }
}
