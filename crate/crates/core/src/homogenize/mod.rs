//! The homogenized tensor by two routes, its symmetries and ellipticity.

mod ellipticity;
mod tensor;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use ellipticity::{check_ellipticity, EllipticityReport, ANGLE_GRID};
pub use tensor::{flux_corrector_mean, tensor_from_energy, tensor_from_formula, HomogenizedTensor, Route};

use crate::cell::CellCorrectorSet;
use crate::fem::{MaterialParams, Tensor4};
use crate::Result;

/// Contents of `ahat.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorReport {
    pub params: MaterialParams,
    pub h_cell: f64,
    pub energy: Tensor4,
    pub formula: Tensor4,
    pub route_gap: f64,
    pub major_symmetry_energy: f64,
    pub cross_symmetry_energy: f64,
    pub major_symmetry_formula: f64,
    pub cross_symmetry_formula: f64,
    pub ellipticity: EllipticityReport,
    pub flux_corrector_mean: Tensor4,
}

impl TensorReport {
    pub fn build(set: &CellCorrectorSet, n_samples: usize, seed: u64) -> Self {
        let energy = tensor_from_energy(set);
        let formula = tensor_from_formula(set);
        Self {
            params: set.params,
            h_cell: set.h,
            energy: energy.entries,
            formula: formula.entries,
            route_gap: energy.relative_gap(&formula),
            major_symmetry_energy: energy.major_symmetry_defect(),
            cross_symmetry_energy: energy.cross_symmetry_defect(),
            major_symmetry_formula: formula.major_symmetry_defect(),
            cross_symmetry_formula: formula.cross_symmetry_defect(),
            ellipticity: check_ellipticity(&energy, &set.params, n_samples, seed),
            flux_corrector_mean: flux_corrector_mean(set, &energy),
        }
    }

    /// The tensor used downstream (energy route).
    pub fn tensor(&self) -> HomogenizedTensor {
        HomogenizedTensor::new(self.energy, Route::Energy)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::lame_tensor;
    use crate::geometry::{build_unit_cell_mesh, InclusionShape, Phase};
    use std::sync::Arc;

    fn unit() -> MaterialParams {
        MaterialParams::new(1.0, 1.0, 1.0).unwrap()
    }

    fn solved(h: f64, params: MaterialParams) -> CellCorrectorSet {
        let cell = Arc::new(build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), h).unwrap());
        CellCorrectorSet::solve(cell, params, h, false).unwrap()
    }

    #[test]
    fn zero_correctors_give_phase_average() {
        let cell = Arc::new(build_unit_cell_mesh(InclusionShape::disk([0.0, 0.0], 0.25), 0.125).unwrap());
        let w = cell.mesh.phase_area(Phase::Fluid);
        let set = CellCorrectorSet::zero(cell, unit());
        for t in [tensor_from_formula(&set), tensor_from_energy(&set)] {
            assert!((t.get(0, 0, 0, 0) - ((1.0 - w) * 3.0 + w * 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_lame_tensor_values() {
        let t = HomogenizedTensor::new(lame_tensor(1.0, 1.0), Route::Formula);
        assert_eq!(t.get(0, 0, 0, 0), 3.0);
        assert_eq!(t.get(0, 1, 0, 1), 1.0);
        assert_eq!(t.get(0, 0, 1, 1), 1.0);
        assert_eq!(t.rank_one([1.0, 0.0], [1.0, 0.0]), 3.0);
        assert!(t.major_symmetry_defect() == 0.0 && t.cross_symmetry_defect() == 0.0);
        let r = check_ellipticity(&t, &unit(), 100, 0);
        assert_eq!(r.bound, 0.5);
        assert!(r.pass && (r.min_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn routes_agree_and_are_symmetric() {
        let set = solved(1.0 / 16.0, unit());
        let e = tensor_from_energy(&set);
        let f = tensor_from_formula(&set);
        assert!(e.relative_gap(&f) < 1e-6, "gap {}", e.relative_gap(&f));
        assert!(e.major_symmetry_defect() < 1e-9 && e.cross_symmetry_defect() < 1e-9);
        assert!(f.major_symmetry_defect() < 1e-6 && f.cross_symmetry_defect() < 1e-6);
        let r = check_ellipticity(&e, &set.params, 10_000, 1);
        assert!(r.pass, "{r:?}");
        // incompressible inclusions stiffen the bulk response
        assert!(e.get(0, 0, 0, 0) > (1.0 - set.cell.mesh.fluid_area()) * 3.0);
    }

    #[test]
    fn ellipticity_for_contrasting_parameters() {
        for p in [(1.0, 0.5, 2.0), (0.2, 1.0, 0.1)] {
            let params = MaterialParams::new(p.0, p.1, p.2).unwrap();
            let set = solved(1.0 / 8.0, params);
            let r = check_ellipticity(&tensor_from_energy(&set), &params, 1000, 7);
            assert!(r.pass, "{p:?}: {r:?}");
        }
    }

    #[test]
    fn report_serializes() {
        let set = solved(1.0 / 8.0, unit());
        let rep = TensorReport::build(&set, 100, 0);
        let mut buf = Vec::new();
        rep.write_json(&mut buf).unwrap();
        let back: TensorReport = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back.energy, rep.energy);
        // the flux mean is the negative of the inclusion pressure term on diagonal pairs
        assert!(rep.flux_corrector_mean[0][1][1][0].abs() < 1e-6, "{:?}", rep.flux_corrector_mean);
    }
}
