//! `cell2macro`: cell problems, homogenized tensor, convergence study and
//! verification ledger from one JSON configuration.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 a check failed, 3 invalid configuration.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use cell2macro::cell::{cache_key, load_correctors, save_correctors, CellCorrectorSet};
use cell2macro::geometry::build_unit_cell_mesh;
use cell2macro::harness::{run_study, verify_suite, StudyConfig};
use cell2macro::homogenize::TensorReport;
use cell2macro::saddle::SolveOptions;
use cell2macro::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cell2macro", version, about = "Periodic homogenization with Stokes inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the three cell problems at `h_cell` and cache the correctors.
    SolveCell {
        #[arg(long)]
        config: PathBuf,
        /// Write the cell saddle matrix in MatrixMarket format.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
    },
    /// Compute the homogenized tensor by both routes and write `ahat.json`.
    Tensor {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the ε-convergence study.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every invariant check and write `ledger.json`.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Check(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

fn output_dir(config: &StudyConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf).or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("cell2macro_out"))
}

fn cell_set(config: &StudyConfig, out: &Path, opts: &SolveOptions) -> Result<CellCorrectorSet, Error> {
    let cell = Arc::new(build_unit_cell_mesh(config.inclusion, config.h_cell)?);
    let dir = config.cache_root(out).join(cache_key(&config.inclusion, config.h_cell, &config.params));
    if opts.dump_matrix.is_none() {
        if let Some(set) = load_correctors(&dir, cell.clone(), &config.params, config.h_cell)? {
            log::info!("correctors loaded from {}", dir.display());
            return Ok(set);
        }
    }
    let set = CellCorrectorSet::solve_with_options(cell, config.params, config.h_cell, true, opts)?;
    save_correctors(&set, &dir)?;
    log::info!("correctors written to {}", dir.display());
    Ok(set)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::SolveCell { config, dump_matrix } => {
            let config = StudyConfig::from_path(&config)?;
            let out = output_dir(&config, None);
            let set = cell_set(&config, &out, &SolveOptions { dump_matrix, ..Default::default() })?;
            println!("{}", serde_json::to_string_pretty(&set.diagnostics).map_err(Error::from)?);
            if let Some(b) = set.inf_sup {
                println!("inf-sup constant: {b:.6}");
            }
        }
        Command::Tensor { config } => {
            let config = StudyConfig::from_path(&config)?;
            let out = output_dir(&config, None);
            fs::create_dir_all(&out)?;
            let set = cell_set(&config, &out, &SolveOptions::default())?;
            let rep = TensorReport::build(&set, config.ellipticity_samples, config.seed);
            rep.write_json(BufWriter::new(File::create(out.join("ahat.json"))?))?;
            println!("{}", serde_json::to_string_pretty(&rep.energy).map_err(Error::from)?);
            println!(
                "route gap {:.3e}, ellipticity min {:.6} (bound {:.6})",
                rep.route_gap, rep.ellipticity.min_value, rep.ellipticity.bound
            );
            if !rep.ellipticity.pass {
                return Err(Failure::Check("homogenized tensor fails the ellipticity bound".into()));
            }
            if rep.route_gap >= 1e-6 {
                return Err(Failure::Check(format!("formula and energy routes differ by {:.3e}", rep.route_gap)));
            }
        }
        Command::Study { config, out } => {
            let config = StudyConfig::from_path(&config)?;
            let rep = run_study(&config, &out)?;
            for r in &rep.rows {
                println!("eps {:<10} plain {:.6e}  mollified {:.6e}", r.eps, r.err_plain, r.err_mollified);
            }
            for (name, fit) in &rep.rates.variants {
                println!("{name}: alpha {:.4}, residual {:.4}", fit.alpha, fit.residual);
            }
        }
        Command::Verify { config, out } => {
            let config = StudyConfig::from_path(&config)?;
            let out = output_dir(&config, out.as_deref());
            let ledger = verify_suite(&config, &out)?;
            for e in &ledger.entries {
                println!(
                    "{} {:<40} measured {:.4e}  bound {}",
                    if e.pass { "PASS" } else { "FAIL" },
                    e.name,
                    e.measured,
                    e.bound
                );
            }
            let failed = ledger.entries.iter().filter(|e| !e.pass).count();
            if failed > 0 {
                return Err(Failure::Check(format!("{failed} of {} ledger entries failed", ledger.entries.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            match e.root() {
                Error::Config(_) | Error::InvalidMaterial(_) | Error::InvalidShape(_) | Error::Parse(_) => {
                    ExitCode::from(3)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
