use serde::{Deserialize, Serialize};

use crate::cell::{unit_strain, CellCorrectorSet};
use crate::fem::{integrate, Tensor4};
use crate::geometry::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Formula,
    Energy,
}

/// â_ij^{αβ}, stored `[i][j][α][β]` with 0-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedTensor {
    pub entries: Tensor4,
    pub provenance: Route,
}

fn d(a: usize, b: usize) -> f64 {
    (a == b) as u8 as f64
}

fn for_all(mut f: impl FnMut(usize, usize, usize, usize)) {
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    f(i, j, a, b);
                }
            }
        }
    }
}

impl HomogenizedTensor {
    pub fn new(entries: Tensor4, provenance: Route) -> Self {
        Self { entries, provenance }
    }

    pub fn get(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        self.entries[i][j][a][b]
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for_all(|i, j, a, b| m = m.max(self.entries[i][j][a][b].abs()));
        m
    }

    fn defect(&self, other: impl Fn(usize, usize, usize, usize) -> f64) -> f64 {
        let mut m = 0.0f64;
        for_all(|i, j, a, b| m = m.max((self.entries[i][j][a][b] - other(i, j, a, b)).abs()));
        m / self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// max |â_ij^{αβ} − â_ji^{βα}| / max |â|.
    pub fn major_symmetry_defect(&self) -> f64 {
        self.defect(|i, j, a, b| self.entries[j][i][b][a])
    }

    /// max |â_ij^{αβ} − â_iβ^{αj}| / max |â|.
    pub fn cross_symmetry_defect(&self) -> f64 {
        self.defect(|i, j, a, b| self.entries[i][b][a][j])
    }

    /// Largest entrywise gap to `other`, relative to max |â|.
    pub fn relative_gap(&self, other: &Self) -> f64 {
        self.defect(|i, j, a, b| other.entries[i][j][a][b])
    }

    /// â_ij^{αβ} ξ_i ξ_j η^α η^β.
    pub fn rank_one(&self, xi: [f64; 2], eta: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for_all(|i, j, a, b| s += self.entries[i][j][a][b] * xi[i] * xi[j] * eta[a] * eta[b]);
        s
    }
}

/// Volume-averaged corrected stress, with the inclusion pressure.
pub fn tensor_from_formula(set: &CellCorrectorSet) -> HomogenizedTensor {
    let p = set.params;
    let mesh = &set.cell.mesh;
    let (ye, yf) = (mesh.phase_area(Phase::Elastic), mesh.phase_area(Phase::Fluid));
    let mut e = [[[[0.0; 2]; 2]; 2]; 2];
    for_all(|i, j, a, b| {
        let lame = p.lambda * d(i, a) * d(j, b) + p.mu * (d(i, b) * d(j, a) + d(i, j) * d(a, b));
        let visc = p.mu_tilde * (d(i, j) * d(a, b) + d(i, b) * d(j, a));
        e[i][j][a][b] = ye * lame + yf * visc;
    });
    // Each χ^{jβ} contributes to the four (i, α) entries.
    for j in 0..2 {
        for b in 0..2 {
            let chi = set.chi(j, b);
            let r = set.r(j, b);
            for i in 0..2 {
                for a in 0..2 {
                    e[i][j][a][b] += integrate(&set.u_space, |t, g, l, _| {
                        let (_, gr) = chi.eval_vector(t, g, l);
                        let sym = gr[a][i] + gr[i][a];
                        match mesh.phase[t] {
                            Phase::Elastic => p.lambda * (gr[0][0] + gr[1][1]) * d(i, a) + p.mu * sym,
                            Phase::Fluid => p.mu_tilde * sym + r.eval(t, g, l).0[0] * d(i, a),
                        }
                    });
                }
            }
        }
    }
    HomogenizedTensor::new(e, Route::Formula)
}

/// â_ij^{αβ} = a(p^{iα} + χ^{iα}, p^{jβ} + χ^{jβ}) with the affine part exact.
pub fn tensor_from_energy(set: &CellCorrectorSet) -> HomogenizedTensor {
    let p = set.params;
    let mesh = &set.cell.mesh;
    let pairs = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let mut e = [[[[0.0; 2]; 2]; 2]; 2];
    for (x, &(i, a)) in pairs.iter().enumerate() {
        for &(j, b) in &pairs[x..] {
            let v = integrate(&set.u_space, |t, g, l, _| {
                let grad = |k: usize, m: usize| {
                    let (_, gr) = set.chi(k, m).eval_vector(t, g, l);
                    let s = unit_strain(k, m);
                    [[s[0][0] + gr[0][0], s[0][1] + gr[0][1]], [s[1][0] + gr[1][0], s[1][1] + gr[1][1]]]
                };
                let (g1, g2) = (grad(i, a), grad(j, b));
                let sym = |m: [[f64; 2]; 2], r: usize, c: usize| 0.5 * (m[r][c] + m[c][r]);
                let mut dd = 0.0;
                for r in 0..2 {
                    for c in 0..2 {
                        dd += sym(g1, r, c) * sym(g2, r, c);
                    }
                }
                let (lam, mu) = p.lame(mesh.phase[t]);
                lam * (g1[0][0] + g1[1][1]) * (g2[0][0] + g2[1][1]) + 2.0 * mu * dd
            });
            e[i][j][a][b] = v;
            e[j][i][b][a] = v;
        }
    }
    HomogenizedTensor::new(e, Route::Energy)
}

/// Cell mean of the flux corrector A(I + ∇χ) − â, without the pressure.
pub fn flux_corrector_mean(set: &CellCorrectorSet, ahat: &HomogenizedTensor) -> Tensor4 {
    let p = set.params;
    let mesh = &set.cell.mesh;
    let area = mesh.total_area();
    let mut e = [[[[0.0; 2]; 2]; 2]; 2];
    for_all(|i, j, a, b| {
        let chi = set.chi(j, b);
        let s = unit_strain(j, b);
        let v = integrate(&set.u_space, |t, g, l, _| {
            let (_, gr) = chi.eval_vector(t, g, l);
            let m = [[s[0][0] + gr[0][0], s[0][1] + gr[0][1]], [s[1][0] + gr[1][0], s[1][1] + gr[1][1]]];
            let (lam, mu) = p.lame(mesh.phase[t]);
            lam * (m[0][0] + m[1][1]) * d(i, a) + mu * (m[a][i] + m[i][a])
        });
        e[i][j][a][b] = v / area - ahat.entries[i][j][a][b];
    });
    e
}
