//! Configuration, the convergence study, rate fits and the verification ledger.

mod config;
mod rate;
mod study;
mod verify;

pub use config::StudyConfig;
pub use rate::{fit_rate, RateFit};
pub use study::{cached_correctors, read_results, run_study, RateFile, SolutionMetaFile, StudyReport, StudyRow};
pub use verify::{verify_suite, Ledger, LedgerEntry, PARAMETER_SETS};
