use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::rate::{fit_rate, RateFit};
use crate::cell::{cache_key, load_correctors, save_correctors, CellCorrectorSet};
use crate::corrector::{check_cutoff, h2_norm, CutoffCheck, CutoffEta, TwoScaleErrors, TwoScaleEvaluator, Variant};
use crate::eps::{solve_eps, solve_homogenized_full, SolutionMeta};
use crate::geometry::{build_domain_mesh_with_cell, build_plain_domain_mesh, CellMesh};
use crate::homogenize::TensorReport;
use crate::{Error, Result};

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub eps: f64,
    /// Nominal ε-mesh size ε/K.
    pub h_domain: f64,
    pub err_plain: f64,
    pub err_mollified: f64,
    pub u0_h2: f64,
    /// Error of the previous (coarser) ε over this one, for the primary variant.
    pub ratio_prev: Option<f64>,
}

/// Contents of `rate.json`: the primary variant's fit plus every variant's.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFile {
    #[serde(flatten)]
    pub primary: RateFit,
    pub variant: Variant,
    pub variants: BTreeMap<String, RateFit>,
}

/// Contents of `solution_meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionMetaFile {
    pub homogenized: SolutionMeta,
    pub eps_solves: Vec<SolutionMeta>,
}

/// Everything a study run produces, in memory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub rates: RateFile,
    /// Fitted order of ‖εχ(∇u₀ − η_ε S_ε²∇u₀)‖ against ε.
    pub gap_rate: Option<RateFit>,
    pub two_scale: Vec<TwoScaleErrors>,
    pub cutoff: Vec<CutoffCheck>,
    pub tensor: TensorReport,
    pub solutions: SolutionMetaFile,
    pub cell_divisions: usize,
    pub cache_hit: bool,
}

impl StudyReport {
    pub fn errors(&self, variant: Variant) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| {
                (
                    r.eps,
                    match variant {
                        Variant::Plain => r.err_plain,
                        Variant::Mollified => r.err_mollified,
                    },
                )
            })
            .collect()
    }
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Plain => "plain",
        Variant::Mollified => "mollified",
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), value)?;
    Ok(())
}

fn write_rows(path: &Path, rows: &[StudyRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Correctors on the tile cell, from `cache_root` when present.
pub fn cached_correctors(
    config: &StudyConfig,
    cell: Arc<CellMesh>,
    h: f64,
    cache_root: &Path,
) -> Result<(CellCorrectorSet, bool)> {
    let dir = cache_root.join(cache_key(&config.inclusion, h, &config.params));
    if let Some(set) = load_correctors(&dir, cell.clone(), &config.params, h)? {
        log::info!("correctors loaded from {}", dir.display());
        return Ok((set, true));
    }
    let set = CellCorrectorSet::solve(cell, config.params, h, false)?;
    save_correctors(&set, &dir)?;
    Ok((set, false))
}

/// Runs the convergence study and writes `results.csv`, `rate.json`,
/// `ahat.json`, `solution_meta.json` and `study.json` into `out`.
///
/// ε values run `workers` at a time; rows are rewritten after every batch so
/// partial results survive a failure.
pub fn run_study(config: &StudyConfig, out: &Path) -> Result<StudyReport> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let k = config.divisions()?;
    let h_tile = 1.0 / k as f64;
    let clock = Instant::now();

    let cell = Arc::new(CellMesh::with_divisions(config.inclusion, k).map_err(|e| e.at_stage("cell mesh"))?);
    let (set, cache_hit) = cached_correctors(config, cell.clone(), h_tile, &config.cache_root(out))
        .map_err(|e| e.at_stage("cell problems"))?;
    let tensor = TensorReport::build(&set, config.ellipticity_samples, config.seed);
    tensor.write_json(BufWriter::new(File::create(out.join("ahat.json"))?))?;
    log::info!("tensor ready after {:.1}s (cache hit: {cache_hit})", clock.elapsed().as_secs_f64());

    let eps_min = *config.eps_list.last().expect("validated");
    let m0 = build_plain_domain_mesh(config.domain, config.h_domain(eps_min)?)
        .map_err(|e| e.at_stage("homogenized mesh"))?;
    let hom = solve_homogenized_full(&m0, &tensor.tensor(), &config.g).map_err(|e| e.at_stage("homogenized solve"))?;
    let u0_h2 = h2_norm(&hom.u);
    log::info!("u0 solved after {:.1}s", clock.elapsed().as_secs_f64());

    let primary = config.variants[0];
    let primary_err = |e: &TwoScaleErrors| match primary {
        Variant::Plain => e.err_plain,
        Variant::Mollified => e.err_mollified,
    };
    let solve_one = |eps: f64| -> Result<(f64, TwoScaleErrors, CutoffCheck, SolutionMeta)> {
        let stage = |what: &str| format!("{what} at eps = {eps}");
        let mesh =
            build_domain_mesh_with_cell(config.domain, eps, cell.clone()).map_err(|e| e.at_stage(stage("ε-mesh")))?;
        let cut = check_cutoff(&mesh, &CutoffEta::new(eps, config.domain));
        let sol = solve_eps(&mesh, &config.params, &config.g).map_err(|e| e.at_stage(stage("ε-solve")))?;
        let ev = TwoScaleEvaluator::new(&mesh, &hom.u, &set).map_err(|e| e.at_stage(stage("corrector")))?;
        let errs = ev.errors(&sol.u, sol.p.as_ref()).map_err(|e| e.at_stage(stage("error norms")))?;
        log::info!(
            "eps {eps}: {} dofs, plain {:.4e}, mollified {:.4e}, after {:.1}s",
            sol.meta.n_displacement_dofs,
            errs.err_plain,
            errs.err_mollified,
            clock.elapsed().as_secs_f64()
        );
        Ok((eps / k as f64, errs, cut, sol.meta))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", config.workers)))?;

    let mut rows: Vec<StudyRow> = Vec::new();
    let mut two_scale: Vec<TwoScaleErrors> = Vec::new();
    let mut cutoff = Vec::new();
    let mut metas = Vec::new();
    for batch in config.eps_list.chunks(config.workers) {
        let done: Vec<Result<_>> = pool.install(|| batch.par_iter().map(|&eps| solve_one(eps)).collect());
        for (&eps, res) in batch.iter().zip(done) {
            let (h_domain, errs, cut, meta) = res?;
            let ratio_prev = two_scale.last().map(|p| primary_err(p) / primary_err(&errs));
            rows.push(StudyRow {
                eps,
                h_domain,
                err_plain: errs.err_plain,
                err_mollified: errs.err_mollified,
                u0_h2,
                ratio_prev,
            });
            two_scale.push(errs);
            cutoff.push(cut);
            metas.push(meta);
        }
        write_rows(&out.join("results.csv"), &rows)?;
    }

    let mut variants = BTreeMap::new();
    let pairs = |v: Variant| -> Vec<(f64, f64)> {
        rows.iter()
            .map(|r| {
                (
                    r.eps,
                    match v {
                        Variant::Plain => r.err_plain,
                        Variant::Mollified => r.err_mollified,
                    },
                )
            })
            .collect()
    };
    for &v in &config.variants {
        let fit = fit_rate(&pairs(v)).map_err(|e| e.at_stage(format!("{} rate", variant_name(v))))?;
        variants.insert(variant_name(v).to_string(), fit);
    }
    let rates = RateFile { primary: variants[variant_name(primary)], variant: primary, variants };
    write_json(&out.join("rate.json"), &rates)?;
    let gap_pairs: Vec<(f64, f64)> = two_scale.iter().map(|e| (e.eps, e.mollification_gap)).collect();
    let gap_rate = fit_rate(&gap_pairs).ok();
    let solutions = SolutionMetaFile { homogenized: hom.meta, eps_solves: metas };
    write_json(&out.join("solution_meta.json"), &solutions)?;
    let report =
        StudyReport { rows, rates, gap_rate, two_scale, cutoff, tensor, solutions, cell_divisions: k, cache_hit };
    write_json(&out.join("study.json"), &report)?;
    log::info!("study finished after {:.1}s", clock.elapsed().as_secs_f64());
    Ok(report)
}

/// Reads `results.csv` back.
pub fn read_results(path: &Path) -> Result<Vec<StudyRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eps::NeumannData;

    fn quick() -> StudyConfig {
        let mut c = StudyConfig::acceptance();
        c.eps_list = vec![0.25, 0.2, 0.125];
        c.h_domain_rule = "eps/4".into();
        c.ellipticity_samples = 100;
        c
    }

    #[test]
    fn zero_load_is_flat_and_keeps_partial_results() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = quick();
        c.g = NeumannData::zero();
        let err = run_study(&c, dir.path()).unwrap_err();
        assert!(matches!(err.root(), Error::FlatData(_)), "{err}");
        let rows = read_results(&dir.path().join("results.csv")).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.err_plain == 0.0 && r.err_mollified == 0.0));
    }

    #[test]
    fn rerun_reuses_cache_bit_identically() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = quick();
        c.g = NeumannData::equilibrated_linear([[1.0, 0.0], [0.0, 0.0]]);
        c.cache_dir = Some(dir.path().join("cache"));
        let a = run_study(&c, &dir.path().join("a")).unwrap();
        let b = run_study(&c, &dir.path().join("b")).unwrap();
        assert!(!a.cache_hit && b.cache_hit);
        let read = |d: &str| fs::read(dir.path().join(d).join("results.csv")).unwrap();
        assert_eq!(read("a"), read("b"));
        assert_eq!(a.rows.len(), 3);
        assert!(a.rows[0].ratio_prev.is_none() && a.rows[1].ratio_prev.is_some());
    }
}
