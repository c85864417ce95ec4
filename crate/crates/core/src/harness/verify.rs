use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::rate::fit_rate;
use super::study::{read_results, run_study, StudyReport};
use crate::cell::{grad_sup_norm, solvability_defect, CellCorrectorSet, CellProblem, INDEX_PAIRS, SOLVABILITY_TOL};
use crate::corrector::{mollification_defect, MollifierKernel, Variant};
use crate::eps::{manufactured_gradient, solve_eps, solve_homogenized, NeumannData};
use crate::fem::{assemble_h1_gram, assemble_mass, h1_norm, lame_tensor, FEField, MaterialParams};
use crate::geometry::{build_plain_domain_mesh, build_unit_cell_mesh};
use crate::homogenize::{check_ellipticity, tensor_from_energy, tensor_from_formula, HomogenizedTensor, Route};
use crate::saddle::{SolveOptions, RESIDUAL_TOL};
use crate::{Error, Result};

/// One ledger line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Contents of `ledger.json`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Ledger {
    pub entries: Vec<LedgerEntry>,
}

impl Ledger {
    /// Records `measured <= bound`.
    pub fn at_most(&mut self, name: impl Into<String>, measured: f64, bound: f64) {
        self.push(name, measured, bound, measured <= bound);
    }

    /// Records `measured >= bound`.
    pub fn at_least(&mut self, name: impl Into<String>, measured: f64, bound: f64) {
        self.push(name, measured, bound, measured >= bound);
    }

    fn push(&mut self, name: impl Into<String>, measured: f64, bound: f64, pass: bool) {
        let name = name.into();
        log::info!("{} {name}: {measured:.4e} (bound {bound:e})", if pass { "pass" } else { "FAIL" });
        self.entries.push(LedgerEntry { name, measured, bound, pass });
    }

    /// An error in a check is itself a failed entry.
    fn failed(&mut self, name: impl Into<String>, err: &Error) {
        let name = name.into();
        log::warn!("{name}: {err}");
        self.entries.push(LedgerEntry { name, measured: f64::NAN, bound: f64::NAN, pass: false });
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    /// Entries whose name starts with `prefix`.
    pub fn group<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a LedgerEntry> + 'a {
        self.entries.iter().filter(move |e| e.name.starts_with(prefix))
    }
}

/// The parameter sets every tensor and solvability check runs on.
pub const PARAMETER_SETS: [(f64, f64, f64); 3] = [(1.0, 1.0, 1.0), (1.0, 0.5, 2.0), (0.2, 1.0, 0.1)];

const INF_SUP_LEVELS: [usize; 3] = [8, 16, 32];
const TENSOR_LEVELS: [usize; 3] = [16, 32, 64];
const GRAD_SUP_LEVELS: [usize; 2] = [64, 128];
const MOLLIFIER_EPS: [f64; 3] = [0.125, 0.0625, 0.03125];

fn label(p: &MaterialParams) -> String {
    format!("({},{},{})", p.lambda, p.mu, p.mu_tilde)
}

fn pair_label(i: usize, j: usize) -> String {
    format!("{}{}", i + 1, j + 1)
}

fn cell_set(config: &StudyConfig, params: MaterialParams, n: usize) -> Result<CellCorrectorSet> {
    let cell = Arc::new(crate::geometry::CellMesh::with_divisions(config.inclusion, n)?);
    CellCorrectorSet::solve(cell, params, 1.0 / n as f64, false)
}

fn tensor_checks(ledger: &mut Ledger, config: &StudyConfig) -> Result<()> {
    let h_cell = config.h_cell;
    let cell = Arc::new(build_unit_cell_mesh(config.inclusion, h_cell)?);
    for p in PARAMETER_SETS {
        let params = MaterialParams::new(p.0, p.1, p.2)?;
        let l = label(&params);
        for (i, j) in INDEX_PAIRS {
            let (d, s) = solvability_defect(&cell, &params, i, j)?;
            ledger.at_most(format!("cell.solvability{l}.{}", pair_label(i, j)), d / s, SOLVABILITY_TOL);
        }
        let set = CellCorrectorSet::solve(cell.clone(), params, h_cell, false)?;
        let energy = tensor_from_energy(&set);
        let formula = tensor_from_formula(&set);
        ledger.at_most(format!("tensor.route_gap{l}"), energy.relative_gap(&formula), 1e-6);
        ledger.at_most(format!("tensor.energy_major_symmetry{l}"), energy.major_symmetry_defect(), 1e-9);
        ledger.at_most(format!("tensor.energy_cross_symmetry{l}"), energy.cross_symmetry_defect(), 1e-9);
        ledger.at_most(format!("tensor.formula_major_symmetry{l}"), formula.major_symmetry_defect(), 1e-6);
        ledger.at_most(format!("tensor.formula_cross_symmetry{l}"), formula.cross_symmetry_defect(), 1e-6);
        let ell = check_ellipticity(&energy, &params, config.ellipticity_samples, config.seed);
        ledger.push(format!("tensor.ellipticity{l}"), ell.min_value, ell.bound, ell.pass);
        let worst_res = set.diagnostics.iter().map(|d| d.residual).fold(0.0, f64::max);
        ledger.at_most(format!("cell.residual{l}"), worst_res, RESIDUAL_TOL);
        let mean = set.diagnostics.iter().flat_map(|d| d.chi_mean).fold(0.0f64, |m, v| m.max(v.abs()));
        ledger.at_most(format!("cell.chi_mean{l}"), mean, 1e-10);
        let fluid = cell.mesh.fluid_area();
        let div = set
            .diagnostics
            .iter()
            .map(|d| (d.inclusion_divergence + if d.i == d.j { fluid } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        ledger.at_most(format!("cell.inclusion_divergence{l}"), div, 1e-10);
    }
    Ok(())
}

fn index_symmetry(ledger: &mut Ledger, config: &StudyConfig) -> Result<()> {
    let cell = Arc::new(build_unit_cell_mesh(config.inclusion, 1.0 / 16.0)?);
    let prob = CellProblem::new(cell, config.params)?;
    let f = prob.factor(&SolveOptions::default())?;
    let (a, _, _) = prob.solve_with(&f, 0, 1)?;
    let (b, _, _) = prob.solve_with(&f, 1, 0)?;
    let diff = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ledger.at_most("cell.index_symmetry_12_21", diff, 1e-10);
    Ok(())
}

fn max_rel_entry_gap(a: &HomogenizedTensor, b: &HomogenizedTensor) -> f64 {
    let mut m = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m = m.max((a.get(i, j, k, l) - b.get(i, j, k, l)).abs());
                }
            }
        }
    }
    m
}

fn tensor_refinement(ledger: &mut Ledger, config: &StudyConfig) -> Result<()> {
    let t: Vec<HomogenizedTensor> = TENSOR_LEVELS
        .iter()
        .map(|&n| cell_set(config, config.params, n).map(|s| tensor_from_energy(&s)))
        .collect::<Result<_>>()?;
    let coarse = max_rel_entry_gap(&t[0], &t[1]);
    let fine = max_rel_entry_gap(&t[1], &t[2]);
    ledger.at_least("tensor.refinement_order", (coarse / fine).log2(), 1.5);
    Ok(())
}

/// σ_min of L_p⁻¹ B L_u⁻ᵀ from dense Cholesky factors.
fn dense_inf_sup(prob: &CellProblem) -> Result<f64> {
    let g = assemble_h1_gram(&prob.u_space).to_dense();
    let m = assemble_mass(&prob.p_space).to_dense();
    let b = prob.b.to_dense();
    let lu = g.cholesky().ok_or_else(|| Error::SingularSystem("H¹ Gram matrix".into()))?.l();
    let lp = m.cholesky().ok_or_else(|| Error::SingularSystem("pressure mass matrix".into()))?.l();
    let x = lu.solve_lower_triangular(&b.transpose()).ok_or_else(|| Error::SingularSystem("H¹ factor".into()))?;
    let y: DMatrix<f64> =
        lp.solve_lower_triangular(&x.transpose()).ok_or_else(|| Error::SingularSystem("mass factor".into()))?;
    Ok(y.singular_values().min())
}

fn inf_sup_checks(ledger: &mut Ledger, config: &StudyConfig) -> Result<()> {
    let mut betas = Vec::new();
    for (k, &n) in INF_SUP_LEVELS.iter().enumerate() {
        let cell = Arc::new(crate::geometry::CellMesh::with_divisions(config.inclusion, n)?);
        let prob = CellProblem::new(cell, config.params)?;
        let beta = prob.inf_sup()?;
        ledger.at_least(format!("cell.inf_sup.h1/{n}"), beta, 0.05);
        if k == 0 {
            let oracle = dense_inf_sup(&prob)?;
            ledger.at_most("cell.inf_sup.dense_oracle_gap", (beta - oracle).abs() / oracle, 1e-8);
        }
        betas.push(beta);
    }
    let max = betas.iter().cloned().fold(f64::MIN, f64::max);
    let min = betas.iter().cloned().fold(f64::MAX, f64::min);
    ledger.at_most("cell.inf_sup.variation", (max - min) / max, 0.25);
    Ok(())
}

fn grad_sup_checks(ledger: &mut Ledger, config: &StudyConfig) -> Result<()> {
    let sets: Vec<CellCorrectorSet> =
        GRAD_SUP_LEVELS.iter().map(|&n| cell_set(config, config.params, n)).collect::<Result<_>>()?;
    let sups: Vec<[f64; 2]> = INDEX_PAIRS
        .iter()
        .map(|&(i, j)| [grad_sup_norm(sets[0].chi(i, j)), grad_sup_norm(sets[1].chi(i, j))])
        .collect();
    // correctors that vanish identically are compared against a roundoff floor
    let floor = 1e-8 * sups.iter().map(|s| s[1]).fold(0.0, f64::max);
    for ((i, j), [a, b]) in INDEX_PAIRS.iter().zip(sups) {
        ledger.at_most(format!("cell.grad_sup_change.{}", pair_label(*i, *j)), (a - b).abs() / b.max(floor), 0.10);
    }
    Ok(())
}

fn mollifier_checks(ledger: &mut Ledger, config: &StudyConfig) -> Result<()> {
    let mut worst = 0.0f64;
    for eps in MOLLIFIER_EPS {
        let k = MollifierKernel::new(eps);
        worst = worst.max((k.mass() - 1.0).abs());
        let c = k.apply([0.1, -0.2], |_| [2.5]);
        worst = worst.max((c[0] - 2.5).abs() / 2.5);
    }
    ledger.at_most("mollifier.constants", worst, 1e-12);
    let mesh = build_plain_domain_mesh(config.domain, 1.0 / 128.0)?;
    let pairs: Vec<(f64, f64)> = MOLLIFIER_EPS
        .iter()
        .map(|&eps| {
            let k = MollifierKernel::new(eps);
            (eps, mollification_defect(&mesh, &k, k.support_radius(), |x| (std::f64::consts::PI * x[0]).sin()))
        })
        .collect();
    ledger.at_least("mollifier.first_order", fit_rate(&pairs)?.alpha, 0.9);
    Ok(())
}

fn manufactured_checks(ledger: &mut Ledger, config: &StudyConfig) -> Result<()> {
    let s = [[1.0, 0.3], [0.3, -0.5]];
    let params = config.params;
    let m = manufactured_gradient(&params, s);
    let g = NeumannData::equilibrated_linear(s);
    let mesh = build_plain_domain_mesh(config.domain, 1.0 / 16.0)?;
    let rel = |u: &FEField| {
        let exact = u.space.interpolate(|x| vec![m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]);
        let diff = FEField::new(u.space.clone(), u.coeffs.iter().zip(&exact.coeffs).map(|(a, b)| a - b).collect());
        h1_norm(&diff) / h1_norm(&exact)
    };
    let u = solve_eps(&mesh, &params, &g)?.u;
    ledger.at_most("manufactured.eps_solver", rel(&u), 1e-8);
    let t = HomogenizedTensor::new(lame_tensor(params.lambda, params.mu), Route::Formula);
    let u = solve_homogenized(&mesh, &t, &g)?;
    ledger.at_most("manufactured.homogenized_solver", rel(&u), 1e-8);
    Ok(())
}

fn study_checks(ledger: &mut Ledger, config: &StudyConfig, out: &Path) -> Result<()> {
    let dir = out.join("verify");
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    let mut cfg = config.clone();
    cfg.cache_dir = Some(dir.join("cache"));
    let cold_dir = dir.join("cold");
    let cold = run_study(&cfg, &cold_dir)?;
    study_entries(ledger, &cold);
    let warm_dir = dir.join("cached");
    let warm = run_study(&cfg, &warm_dir)?;
    ledger.at_least("study.cache_reused", warm.cache_hit as u8 as f64, 1.0);
    let same = fs::read(cold_dir.join("results.csv"))? == fs::read(warm_dir.join("results.csv"))?;
    ledger.at_least("study.results_byte_identical", same as u8 as f64, 1.0);
    let (a, b) = (read_results(&cold_dir.join("results.csv"))?, read_results(&warm_dir.join("results.csv"))?);
    let mut gap = if a.len() == b.len() { 0.0f64 } else { f64::INFINITY };
    for (x, y) in a.iter().zip(&b) {
        for (p, q) in [(x.err_plain, y.err_plain), (x.err_mollified, y.err_mollified), (x.u0_h2, y.u0_h2)] {
            gap = gap.max((p - q).abs() / p.abs().max(f64::MIN_POSITIVE));
        }
    }
    ledger.at_most("study.cache_consistency", gap, 1e-12);
    Ok(())
}

fn study_entries(ledger: &mut Ledger, rep: &StudyReport) {
    for v in [Variant::Plain, Variant::Mollified] {
        let name = match v {
            Variant::Plain => "plain",
            Variant::Mollified => "mollified",
        };
        let pairs = rep.errors(v);
        match fit_rate(&pairs) {
            Ok(f) => {
                ledger.at_least(format!("study.rate.{name}.alpha_min"), f.alpha, 0.40);
                ledger.at_most(format!("study.rate.{name}.alpha_max"), f.alpha, 0.75);
                ledger.at_most(format!("study.rate.{name}.residual"), f.residual, 0.1);
            }
            Err(e) => ledger.failed(format!("study.rate.{name}"), &e),
        }
        let worst = pairs.windows(2).map(|w| w[1].1 / w[0].1).fold(0.0, f64::max);
        ledger.push(format!("study.monotone.{name}"), worst, 1.0, worst < 1.0);
    }
    match &rep.gap_rate {
        Some(f) => ledger.at_least("study.mollification_gap_order", f.alpha, 0.4),
        None => ledger.failed("study.mollification_gap_order", &Error::FlatData("mollification gap vanishes".into())),
    }
    for (c, e) in rep.cutoff.iter().zip(&rep.rows) {
        ledger.at_most(format!("cutoff.violations.eps{}", e.eps), c.violations as f64, 0.0);
    }
    for m in &rep.solutions.eps_solves {
        let e = m.eps;
        ledger.at_most(format!("eps_solve.residual.eps{e}"), m.residual, RESIDUAL_TOL);
        ledger.at_most(format!("eps_solve.trace_orthogonality.eps{e}"), m.trace_orthogonality, 1e-10);
        ledger.at_most(format!("eps_solve.incompressibility.eps{e}"), m.incompressibility, 1e-10);
        ledger.at_most(
            format!("eps_solve.energy_identity.eps{e}"),
            (m.energy - m.boundary_work).abs() / m.energy.abs().max(f64::MIN_POSITIVE),
            1e-9,
        );
    }
    let h = &rep.solutions.homogenized;
    ledger.at_most("homogenized_solve.residual", h.residual, RESIDUAL_TOL);
    ledger.at_most("homogenized_solve.trace_orthogonality", h.trace_orthogonality, 1e-10);
    ledger.push(
        "tensor.study_ellipticity",
        rep.tensor.ellipticity.min_value,
        rep.tensor.ellipticity.bound,
        rep.tensor.ellipticity.pass,
    );
}

/// Runs every acceptance-grade check and writes `ledger.json` into `out`.
///
/// A check that errors becomes a failed entry; only I/O on the ledger itself
/// is reported as an error.
pub fn verify_suite(config: &StudyConfig, out: &Path) -> Result<Ledger> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let mut ledger = Ledger::default();
    type Check = fn(&mut Ledger, &StudyConfig) -> Result<()>;
    let checks: [(&str, Check); 7] = [
        ("tensor", tensor_checks),
        ("cell.index_symmetry", index_symmetry),
        ("tensor.refinement", tensor_refinement),
        ("cell.inf_sup", inf_sup_checks),
        ("cell.grad_sup", grad_sup_checks),
        ("mollifier", mollifier_checks),
        ("manufactured", manufactured_checks),
    ];
    for (name, check) in checks {
        if let Err(e) = check(&mut ledger, config) {
            ledger.failed(name, &e);
        }
    }
    if let Err(e) = study_checks(&mut ledger, config, out) {
        ledger.failed("study", &e);
    }
    serde_json::to_writer_pretty(BufWriter::new(File::create(out.join("ledger.json"))?), &ledger)?;
    Ok(ledger)
}
