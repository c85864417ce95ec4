use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cutoff::{eval_cutoff, CutoffEta};
use super::mollifier::MollifierKernel;
use crate::cell::CellCorrectorSet;
use crate::eps::project_gradient;
use crate::fem::quadrature::{bary_point, TRI6_BARY, TRI6_WEIGHTS};
use crate::fem::{ElemGeom, FEField, FESpace, Family};
use crate::geometry::{barycentric, CellMesh, DomainMesh, Locator, Phase};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// u_ε − u₀ − εχ(x/ε)∇u₀.
    Plain,
    /// w_ε = u_ε − u₀ − εχ(x/ε)η_ε S_ε²(∇u₀).
    Mollified,
}

/// All two-scale norms of one ε, from a single quadrature pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoScaleErrors {
    pub eps: f64,
    pub err_plain: f64,
    pub err_mollified: f64,
    /// ‖εχ(x/ε)(∇u₀ − η_ε S_ε²∇u₀)‖_{H¹}.
    pub mollification_gap: f64,
    /// ‖u_ε − u₀‖_{H¹}.
    pub err_no_corrector: f64,
    /// ‖p_ε − (∇u₀)^{jβ} r^{jβ}(x/ε)‖_{L²(D_ε)} / ‖p_ε‖_{L²(D_ε)}; 0 without inclusions.
    pub pressure_corrector_gap: f64,
    /// Vertices where η_ε > 0 whose double kernel reach (ε) would leave Ω.
    pub zero_extension_violations: usize,
}

fn same_cell(a: &CellMesh, b: &CellMesh) -> bool {
    a.divisions == b.divisions && a.mesh.vertices == b.mesh.vertices && a.mesh.triangles == b.mesh.triangles
}

/// Evaluates χ^{jβ}(x/ε) and ∇_yχ^{jβ} on an ε-mesh tiled from the corrector cell.
pub struct CellSampler<'a> {
    eps: f64,
    domain: &'a DomainMesh,
    set: &'a CellCorrectorSet,
    cell_loc: Locator,
}

/// Values `[slot][α]` and gradients `[slot][α][k]` of the three correctors.
pub type CellSample = ([[f64; 2]; 3], [[[f64; 2]; 2]; 3]);

impl<'a> CellSampler<'a> {
    pub fn new(domain: &'a DomainMesh, set: &'a CellCorrectorSet) -> Result<Self> {
        let cell = domain.cell.as_ref().ok_or_else(|| Error::MeshMismatch("ε-mesh carries no cell tiling".into()))?;
        if !same_cell(cell, &set.cell) {
            return Err(Error::MeshMismatch(
                "correctors were solved on a different cell mesh than the ε-mesh tiles".into(),
            ));
        }
        Ok(Self { eps: domain.eps, domain, set, cell_loc: Locator::new(&set.cell.mesh) })
    }

    fn eval_cell(&self, ct: usize, l: [f64; 3]) -> CellSample {
        let g = ElemGeom::new(self.set.cell.mesh.corners(ct));
        let mut v = [[0.0; 2]; 3];
        let mut d = [[[0.0; 2]; 2]; 3];
        for (k, f) in self.set.chi_fields().iter().enumerate() {
            let (a, b) = f.eval_vector(ct, &g, l);
            v[k] = a;
            d[k] = b;
        }
        (v, d)
    }

    /// Sample at x, using the tile of ε-mesh triangle `t` when it has one.
    pub fn sample(&self, t: Option<usize>, x: [f64; 2]) -> CellSample {
        let n = [(x[0] / self.eps + 0.5).floor(), (x[1] / self.eps + 0.5).floor()];
        if let Some((li, ct)) = t.and_then(|t| self.domain.triangle_tile[t]) {
            let nl = self.domain.lattice[li];
            let y = [x[0] / self.eps - nl[0] as f64, x[1] / self.eps - nl[1] as f64];
            return self.eval_cell(ct, barycentric(&self.set.cell.mesh, ct, y));
        }
        let y = [x[0] / self.eps - n[0], x[1] / self.eps - n[1]];
        let loc = self.cell_loc.locate_or_nearest(&self.set.cell.mesh, y);
        self.eval_cell(loc.triangle, loc.bary)
    }

    /// r^{jβ}(x/ε) for the three slots, inside tile triangle `t`.
    fn pressure(&self, t: usize, x: [f64; 2]) -> Option<[f64; 3]> {
        let (li, ct) = self.domain.triangle_tile[t]?;
        let nl = self.domain.lattice[li];
        let y = [x[0] / self.eps - nl[0] as f64, x[1] / self.eps - nl[1] as f64];
        let l = barycentric(&self.set.cell.mesh, ct, y);
        let g = ElemGeom::new(self.set.cell.mesh.corners(ct));
        Some([0, 1, 2].map(|k| self.set.r_fields()[k].eval(ct, &g, l).0[0]))
    }
}

/// Corrector slot of tensor component 2β + j, i.e. of the pair (j, β).
const SLOT: [usize; 4] = [0, 1, 1, 2];

/// εΣ_{jβ} T_{βj} χ^{jβ}(x/ε) and its gradient, for a tensor value T
/// (component 2β + j holds ∂_j u^β) with gradient dT[comp][k].
fn corrector_term(eps: f64, s: &CellSample, t: [f64; 4], dt: [[f64; 2]; 4]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (v, d) = s;
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for (comp, &slot) in SLOT.iter().enumerate() {
        for a in 0..2 {
            val[a] += eps * t[comp] * v[slot][a];
            for k in 0..2 {
                grad[a][k] += eps * dt[comp][k] * v[slot][a] + t[comp] * d[slot][a][k];
            }
        }
    }
    (val, grad)
}

/// Everything needed to evaluate the two-scale error norms for one ε.
pub struct TwoScaleEvaluator<'a> {
    pub domain: &'a DomainMesh,
    pub u0: &'a FEField,
    pub set: &'a CellCorrectorSet,
    pub eta: CutoffEta,
    pub kernel: MollifierKernel,
    sampler: CellSampler<'a>,
    u0_loc: Locator,
    /// L²-projected ∇u₀ on the u₀ mesh.
    grad_proj: FEField,
    /// η_ε S_ε²(∇u₀) as a P1 tensor field on the ε-mesh.
    mollified: FEField,
    zero_extension_violations: usize,
}

impl<'a> TwoScaleEvaluator<'a> {
    pub fn new(domain: &'a DomainMesh, u0: &'a FEField, set: &'a CellCorrectorSet) -> Result<Self> {
        if u0.space.family != Family::VectorP2 {
            return Err(Error::MeshMismatch("u₀ must be a P2 displacement".into()));
        }
        let eps = domain.eps;
        let sampler = CellSampler::new(domain, set)?;
        let eta = CutoffEta::new(eps, domain.domain);
        let kernel = MollifierKernel::new(eps);
        let u0_loc = Locator::new(&u0.space.mesh);
        let (grad_proj, _) = project_gradient(u0)?;

        // first pass: S_ε(∇u₀) at u₀-mesh vertices that a second pass can reach
        let m0 = &u0.space.mesh;
        let t0 = Arc::new(FESpace::tensor_p1(m0.clone()));
        let raw_grad = |x: [f64; 2]| -> [f64; 4] {
            match u0_loc.locate(m0, x) {
                Some(l) => {
                    let (_, g) = u0.eval_vector(l.triangle, &ElemGeom::new(m0.corners(l.triangle)), l.bary);
                    [g[0][0], g[0][1], g[1][0], g[1][1]]
                }
                None => [0.0; 4],
            }
        };
        let reach = 3.0 * eps - kernel.support_radius() - 2.0 * m0.h.max(domain.mesh.h);
        let mut first = vec![0.0; t0.dof_count()];
        for (n, &x) in t0.node_coords().iter().enumerate() {
            if domain.domain.distance_to_boundary(x) >= reach && domain.domain.contains_strict(x) {
                first[4 * n..4 * n + 4].copy_from_slice(&kernel.apply(x, raw_grad));
            }
        }
        let first = FEField::new(t0, first);

        // second pass at ε-mesh vertices where η_ε > 0
        let te = Arc::new(FESpace::tensor_p1(domain.mesh.clone()));
        let mut second = vec![0.0; te.dof_count()];
        let mut zero_extension_violations = 0;
        for v in 0..domain.mesh.n_vertices() {
            let x = domain.mesh.vertices[v];
            let d = domain.vertex_boundary_distance[v];
            let (e, _) = eval_cutoff(x, &eta, d);
            if e == 0.0 {
                continue;
            }
            if d < 2.0 * kernel.support_radius() {
                zero_extension_violations += 1;
            }
            let s = kernel.apply(x, |p| match u0_loc.locate(m0, p) {
                Some(l) => first.eval(l.triangle, &ElemGeom::new(m0.corners(l.triangle)), l.bary).0,
                None => [0.0; 4],
            });
            let n = te.vertex_node(v).expect("tensor P1 node at every vertex");
            for k in 0..4 {
                second[4 * n + k] = e * s[k];
            }
        }
        let mollified = FEField::new(te, second);
        Ok(Self { domain, u0, set, eta, kernel, sampler, u0_loc, grad_proj, mollified, zero_extension_violations })
    }

    /// η_ε S_ε²(∇u₀) on the ε-mesh.
    pub fn mollified_gradient(&self) -> &FEField {
        &self.mollified
    }

    fn u0_at(&self, x: [f64; 2]) -> (usize, [f64; 3], [f64; 2], [[f64; 2]; 2]) {
        let m0 = &self.u0.space.mesh;
        let l = self.u0_loc.locate_or_nearest(m0, x);
        let (v, g) = self.u0.eval_vector(l.triangle, &ElemGeom::new(m0.corners(l.triangle)), l.bary);
        (l.triangle, l.bary, v, g)
    }

    /// All norms for `u_eps` (a P2 field on the ε-mesh) with optional pressure.
    pub fn errors(&self, u_eps: &FEField, p_eps: Option<&FEField>) -> Result<TwoScaleErrors> {
        if !Arc::ptr_eq(&u_eps.space.mesh, &self.domain.mesh) {
            return Err(Error::MeshMismatch("u_ε does not live on the ε-mesh".into()));
        }
        let eps = self.domain.eps;
        let mesh = &self.domain.mesh;
        let m0 = &self.u0.space.mesh;
        let (mut plain, mut moll, mut gap, mut bare) = (0.0, 0.0, 0.0, 0.0);
        let (mut pgap, mut pnorm) = (0.0, 0.0);
        for t in 0..mesh.n_triangles() {
            let c = mesh.corners(t);
            let geom = ElemGeom::new(c);
            for (l, w) in TRI6_BARY.iter().zip(TRI6_WEIGHTS) {
                let w = w * geom.area;
                let x = bary_point(&c, *l);
                let (ue, gue) = u_eps.eval_vector(t, &geom, *l);
                let (t0, l0, u0, gu0) = self.u0_at(x);
                let s = self.sampler.sample(Some(t), x);
                let (pv, pg) = self.grad_proj.eval(t0, &ElemGeom::new(m0.corners(t0)), l0);
                let (mv, mg) = self.mollified.eval(t, &geom, *l);
                let (cp, dcp) = corrector_term(eps, &s, pv, pg);
                let (cm, dcm) = corrector_term(eps, &s, mv, mg);
                let sq = |o: [f64; 2], g: [[f64; 2]; 2]| {
                    let mut r = 0.0;
                    for a in 0..2 {
                        r += o[a] * o[a] + g[a][0] * g[a][0] + g[a][1] * g[a][1];
                    }
                    r
                };
                let dv = [ue[0] - u0[0], ue[1] - u0[1]];
                let dg =
                    [[gue[0][0] - gu0[0][0], gue[0][1] - gu0[0][1]], [gue[1][0] - gu0[1][0], gue[1][1] - gu0[1][1]]];
                let sub = |c: [f64; 2], dc: [[f64; 2]; 2]| {
                    (
                        [dv[0] - c[0], dv[1] - c[1]],
                        [[dg[0][0] - dc[0][0], dg[0][1] - dc[0][1]], [dg[1][0] - dc[1][0], dg[1][1] - dc[1][1]]],
                    )
                };
                let (a, b) = sub(cp, dcp);
                plain += w * sq(a, b);
                let (a, b) = sub(cm, dcm);
                moll += w * sq(a, b);
                bare += w * sq(dv, dg);
                let gv = [cp[0] - cm[0], cp[1] - cm[1]];
                let gg =
                    [[dcp[0][0] - dcm[0][0], dcp[0][1] - dcm[0][1]], [dcp[1][0] - dcm[1][0], dcp[1][1] - dcm[1][1]]];
                gap += w * sq(gv, gg);
                if let (Some(p), Phase::Fluid) = (p_eps, mesh.phase[t]) {
                    if let Some(r) = self.sampler.pressure(t, x) {
                        let p0 = pv[0] * r[0] + (pv[1] + pv[2]) * r[1] + pv[3] * r[2];
                        let pe = p.eval(t, &geom, *l).0[0];
                        pgap += w * (pe - p0).powi(2);
                        pnorm += w * pe * pe;
                    }
                }
            }
        }
        Ok(TwoScaleErrors {
            eps,
            err_plain: plain.sqrt(),
            err_mollified: moll.sqrt(),
            mollification_gap: gap.sqrt(),
            err_no_corrector: bare.sqrt(),
            pressure_corrector_gap: if pnorm > 0.0 { (pgap / pnorm).sqrt() } else { 0.0 },
            zero_extension_violations: self.zero_extension_violations,
        })
    }

    pub fn error_h1(&self, u_eps: &FEField, variant: Variant) -> Result<f64> {
        let e = self.errors(u_eps, None)?;
        Ok(match variant {
            Variant::Plain => e.err_plain,
            Variant::Mollified => e.err_mollified,
        })
    }

    /// Nodal interpolant of w_ε on the ε-mesh displacement space.
    pub fn build_w_eps(&self, u_eps: &FEField) -> Result<FEField> {
        if !Arc::ptr_eq(&u_eps.space.mesh, &self.domain.mesh) || u_eps.space.family != Family::VectorP2 {
            return Err(Error::MeshMismatch("u_ε does not live on the ε-mesh P2 space".into()));
        }
        let space = u_eps.space.clone();
        let mesh = &self.domain.mesh;
        let mloc = Locator::new(mesh);
        let mut out = u_eps.coeffs.clone();
        for (n, &x) in space.node_coords().iter().enumerate() {
            let (_, _, u0, _) = self.u0_at(x);
            let l = mloc.locate_or_nearest(mesh, x);
            let (g, _) = self.mollified.eval(l.triangle, &ElemGeom::new(mesh.corners(l.triangle)), l.bary);
            let s = self.sampler.sample(None, x);
            let (c, _) = corrector_term(self.domain.eps, &s, g, [[0.0; 2]; 4]);
            for a in 0..2 {
                out[2 * n + a] -= u0[a] + c[a];
            }
        }
        Ok(FEField::new(space, out))
    }
}
