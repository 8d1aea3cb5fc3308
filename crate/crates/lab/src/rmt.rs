//! Extreme singular values of random designs against the concentration bounds.

use benign_core::bounds::{extreme_singulars, smin_bound, Orientation};
use benign_core::datagen::sample_design;
use benign_core::rng::sub_seed;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::output::{cell, Table};
use crate::stats::{median, quantile};
use crate::{cell_seed, par_map, tags, Report};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularRecord {
    pub n: usize,
    pub p: usize,
    pub trial: usize,
    pub s_min: f64,
    pub s_max: f64,
}

/// Samples the design of cell `(p, trial)` exactly as the sweep does.
pub fn run_trial(cfg: &ExperimentConfig, p: usize, trial: usize) -> LabResult<SingularRecord> {
    let seed = cell_seed(cfg.master_seed, p, trial);
    let design = sample_design::<f64>(cfg.n, p, cfg.dist_kind, sub_seed(seed, tags::DESIGN))?;
    let (s_min, s_max) = extreme_singulars(&design.x)?;
    Ok(SingularRecord {
        n: cfg.n,
        p,
        trial,
        s_min,
        s_max,
    })
}

pub fn run_rmt(cfg: &ExperimentConfig) -> LabResult<Vec<SingularRecord>> {
    let cells: Vec<(usize, usize)> = cfg
        .p_grid
        .iter()
        .flat_map(|&p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    par_map(cfg.threads, cells, |(p, t)| run_trial(cfg, p, t))
}

/// Rows orientation when `n ≥ p`, columns otherwise.
pub fn orientation_for(n: usize, p: usize) -> Orientation {
    if n >= p {
        Orientation::Rows
    } else {
        Orientation::Columns
    }
}

/// `√big − 3√small`, the shape check with the constant fixed at 3.
pub fn shape_floor(n: usize, p: usize) -> f64 {
    let (big, small) = if n >= p { (n, p) } else { (p, n) };
    (big as f64).sqrt() - 3.0 * (small as f64).sqrt()
}

pub fn record_table(records: &[SingularRecord]) -> Table {
    let mut t = Table::new(&["n", "p", "trial", "s_min", "s_max"]);
    for r in records {
        t.push(vec![cell(r.n), cell(r.p), cell(r.trial), cell(r.s_min), cell(r.s_max)]);
    }
    t
}

pub fn summary_table(cfg: &ExperimentConfig, records: &[SingularRecord]) -> Table {
    let mut t = Table::new(&[
        "n",
        "p",
        "alpha",
        "orientation",
        "trials",
        "min_s_min",
        "q01_s_min",
        "median_s_min",
        "median_s_max",
        "smin_bound",
        "frac_above_bound",
        "success_prob",
        "shape_floor",
        "shape_ok",
    ]);
    let n = cfg.n;
    for &p in &cfg.p_grid {
        let s: Vec<f64> = records.iter().filter(|r| r.p == p).map(|r| r.s_min).collect();
        let s_max: Vec<f64> = records.iter().filter(|r| r.p == p).map(|r| r.s_max).collect();
        let orientation = orientation_for(n, p);
        let big = n.max(p) as f64;
        let min = s.iter().copied().fold(f64::INFINITY, f64::min);
        let floor = shape_floor(n, p);
        for &alpha in &cfg.alpha_grid {
            let bound = smin_bound(orientation, alpha, cfg.bp.c_kx, n, p);
            let above = s.iter().filter(|&&v| v >= bound).count() as f64 / s.len() as f64;
            let prob = (1.0 - 2.0 * (-cfg.bp.c_kx_small * alpha * alpha * big).exp()).clamp(0.0, 1.0);
            t.push(vec![
                cell(n),
                cell(p),
                cell(alpha),
                cell(match orientation {
                    Orientation::Rows => "rows",
                    Orientation::Columns => "columns",
                }),
                cell(s.len()),
                cell(min),
                cell(quantile(&s, 0.01)),
                cell(median(&s)),
                cell(median(&s_max)),
                cell(bound),
                cell(above),
                cell(prob),
                cell(floor),
                cell(min >= floor),
            ]);
        }
    }
    t
}

pub fn report(cfg: &ExperimentConfig) -> LabResult<Report> {
    let records = run_rmt(cfg)?;
    Ok(Report {
        summary: summary_table(cfg, &records),
        records: record_table(&records),
        extra_tables: Vec::new(),
        extra_json: Vec::new(),
        meta: json!({}),
    })
}
