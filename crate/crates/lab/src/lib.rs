//! Seeded Monte Carlo campaigns on top of `benign_core`: the double-descent
//! sweep, singular value concentration, coupon collector checks, the
//! generalisation bound and constant calibration.
//!
//! Every `(p, trial)` cell draws from its own stream derived from
//! `master_seed`, so cells can be re-run independently and results do not
//! depend on the thread count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod config;
pub mod coupon;
pub mod error;
pub mod generalization;
pub mod output;
pub mod rmt;
pub mod stats;
pub mod sweep;

use std::path::{Path, PathBuf};
use std::time::Instant;

use benign_core::rng::{mix64, trial_seed};
use rayon::prelude::*;

pub use config::{Experiment, ExperimentConfig, Init};
pub use error::{LabError, LabResult};
pub use output::Table;

/// Stream tags for the draws of one cell.
pub mod tags {
    pub const DESIGN: u64 = 1;
    pub const THETA: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const TEST: u64 = 4;
    pub const RISK: u64 = 5;
    pub const ATOMS: u64 = 6;
}

/// Seed of cell `(p, trial)`.
pub fn cell_seed(master: u64, p: usize, trial: usize) -> u64 {
    trial_seed(mix64(trial_seed(master, p as u64)), trial as u64)
}

/// Maps `f` over `items` on a pool of `threads` workers, keeping input order.
pub fn par_map<I, O, F>(threads: usize, items: Vec<I>, f: F) -> LabResult<Vec<O>>
where
    I: Send,
    O: Send,
    F: Fn(I) -> LabResult<O> + Sync + Send,
{
    if threads <= 1 {
        return items.into_iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Config(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| items.into_par_iter().map(f).collect())
}

/// Tables produced by one experiment.
#[derive(Debug, Clone)]
pub struct Report {
    pub records: Table,
    pub summary: Table,
    /// Further CSV files, by file name.
    pub extra_tables: Vec<(String, Table)>,
    /// Further JSON files, by file name.
    pub extra_json: Vec<(String, serde_json::Value)>,
    /// Run information for `meta.json` only (timings and the like).
    pub meta: serde_json::Value,
}

/// Runs the configured experiment without touching the filesystem.
pub fn run(cfg: &ExperimentConfig) -> LabResult<Report> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Sweep => sweep::report(cfg),
        Experiment::Rmt => rmt::report(cfg),
        Experiment::Coupon => coupon::report(cfg),
        Experiment::Generalization => generalization::report(cfg),
        Experiment::Calibrate => calibrate::report(cfg),
    }
}

/// Runs the experiment and writes `records.csv`, `summary.csv`, any extra
/// outputs and `meta.json` into `out_dir`. Returns the directory used.
pub fn execute(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> LabResult<PathBuf> {
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_path.clone());
    output::ensure_dir(&dir)?;
    let started = output::now_unix();
    let clock = Instant::now();
    let report = run(cfg)?;
    report.records.write_file(&dir.join("records.csv"))?;
    report.summary.write_file(&dir.join("summary.csv"))?;
    for (name, table) in &report.extra_tables {
        table.write_file(&dir.join(name))?;
    }
    for (name, value) in &report.extra_json {
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| LabError::Io(e.to_string()))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| LabError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    output::write_meta(&dir, cfg, started, clock.elapsed().as_secs_f64(), &report.meta)?;
    Ok(dir)
}
