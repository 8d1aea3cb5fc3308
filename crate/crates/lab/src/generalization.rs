//! Prediction error of the minimum-norm stationary point on a fresh row.

use benign_core::bounds::{coupon_sample_threshold, epsilon_cover, generalization_bound};
use benign_core::datagen::{sample_design, sample_row, sample_theta_star, synthesize, Design};
use benign_core::risk::RiskContext;
use benign_core::rng::{rng_from_seed, sub_seed};
use benign_core::solver::{newton_flow_with_svd, project_rowspace, svd_factors, NewtonOptions, Regime};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde_json::json;

use crate::config::{ExperimentConfig, Init};
use crate::error::LabResult;
use crate::output::{cell, Table};
use crate::stats::median;
use crate::{cell_seed, par_map, tags, Report};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizationRecord {
    pub p: usize,
    pub trial: usize,
    /// `|X_{n+1}ᵗ(θ̂♯ − θ*)|/√p`.
    pub pred_error: f64,
    pub pred_error_raw: f64,
    /// NaN when the regime condition fails.
    pub bound: f64,
    pub within: bool,
    /// Whether `X_{n+1}` coincides with a design row.
    pub seen_in_sample: bool,
    pub converged: bool,
}

/// The fixed atoms of the discrete design distribution for grid point `p`.
pub fn atoms(cfg: &ExperimentConfig, p: usize, count: usize) -> LabResult<Vec<DVector<f64>>> {
    let seed = sub_seed(cell_seed(cfg.master_seed, p, usize::MAX), tags::ATOMS);
    let d = sample_design::<f64>(count, p, cfg.dist_kind, seed)?;
    Ok(d.x.row_iter().map(|r| r.transpose()).collect())
}

/// Design rows and the fresh row for one cell.
fn draw_rows(
    cfg: &ExperimentConfig,
    p: usize,
    seed: u64,
    support: Option<&[DVector<f64>]>,
) -> LabResult<(Design<f64>, DVector<f64>)> {
    let n = cfg.n;
    match support {
        Some(atoms) => {
            let mut rng = rng_from_seed(sub_seed(seed, tags::DESIGN));
            let mut x = DMatrix::zeros(n, p);
            for i in 0..n {
                let a = rng.random_range(0..atoms.len());
                x.set_row(i, &atoms[a].transpose());
            }
            let mut test = rng_from_seed(sub_seed(seed, tags::TEST));
            let x_new = atoms[test.random_range(0..atoms.len())].clone();
            let design = Design {
                x,
                kind: cfg.dist_kind,
                seed: sub_seed(seed, tags::DESIGN),
            };
            Ok((design, x_new))
        }
        None => {
            let design = sample_design(n, p, cfg.dist_kind, sub_seed(seed, tags::DESIGN))?;
            let mut rng = rng_from_seed(sub_seed(seed, tags::TEST));
            let mut row = vec![0.0; p];
            sample_row(cfg.dist_kind, &mut rng, &mut row);
            Ok((design, DVector::from_vec(row)))
        }
    }
}

pub fn run_trial(
    cfg: &ExperimentConfig,
    p: usize,
    trial: usize,
    support: Option<&[DVector<f64>]>,
) -> LabResult<GeneralizationRecord> {
    let n = cfg.n;
    let seed = cell_seed(cfg.master_seed, p, trial);
    let ridge = cfg.ridge()?;
    let (design, x_new) = draw_rows(cfg, p, seed, support)?;
    let seen_in_sample = design.x.row_iter().any(|r| r.transpose() == x_new);
    let theta_star = sample_theta_star(p, cfg.theta_star_norm, sub_seed(seed, tags::THETA))?;
    let ds = synthesize(design, theta_star, ridge, cfg.noise()?, sub_seed(seed, tags::NOISE))?;
    let bound = generalization_bound(&cfg.bp, n, p, cfg.cover_eps, ds.theta_star.norm())
        .unwrap_or(f64::NAN);
    let mut rec = GeneralizationRecord {
        p,
        trial,
        pred_error: f64::NAN,
        pred_error_raw: f64::NAN,
        bound,
        within: false,
        seen_in_sample,
        converged: false,
    };
    let svd = svd_factors(ds.x())?;
    let ctx = RiskContext::from_dataset(&ds, cfg.loss()?);
    let init = match cfg.init {
        Init::Warm => ds.theta_star.clone(),
        Init::Cold => DVector::zeros(p),
    };
    if let Ok(sp) = newton_flow_with_svd(&ctx, &init, &NewtonOptions::default(), Regime::Over, &svd) {
        let sharp = project_rowspace(&svd, &sp.theta_hat);
        rec.converged = sp.converged;
        rec.pred_error_raw = x_new.dot(&(&sharp - &ds.theta_star)).abs();
        rec.pred_error = rec.pred_error_raw / (p as f64).sqrt();
        rec.within = rec.pred_error <= bound;
    }
    Ok(rec)
}

/// Support cover for grid point `p`: the atoms when the design is discrete,
/// otherwise the design rows of trial 0 as a proxy for the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportCover {
    pub n_cover: usize,
    pub p_min_hat: f64,
    /// Sample size demanded for hitting every ball (`t = 2`); NaN when the
    /// covering number exceeds the binomial-sum cap.
    pub sample_threshold: f64,
}

pub fn support_cover(
    cfg: &ExperimentConfig,
    p: usize,
    support: Option<&[DVector<f64>]>,
) -> LabResult<Option<SupportCover>> {
    if cfg.cover_eps <= 0.0 {
        return Ok(None);
    }
    let points: Vec<DVector<f64>> = match support {
        Some(a) => a.to_vec(),
        None => {
            let seed = cell_seed(cfg.master_seed, p, 0);
            let (design, _) = draw_rows(cfg, p, seed, None)?;
            design.x.row_iter().map(|r| r.transpose()).collect()
        }
    };
    let rep = epsilon_cover(&points, cfg.cover_eps)?;
    let sample_threshold =
        coupon_sample_threshold(rep.n_cover as u64, rep.p_min_hat, 2.0).unwrap_or(f64::NAN);
    Ok(Some(SupportCover {
        n_cover: rep.n_cover,
        p_min_hat: rep.p_min_hat,
        sample_threshold,
    }))
}

pub fn run_generalization(
    cfg: &ExperimentConfig,
) -> LabResult<(Vec<GeneralizationRecord>, Vec<Option<SupportCover>>)> {
    let supports: Vec<Option<Vec<DVector<f64>>>> = cfg
        .p_grid
        .iter()
        .map(|&p| cfg.support_atoms.map(|k| atoms(cfg, p, k)).transpose())
        .collect::<LabResult<_>>()?;
    let cells: Vec<(usize, usize, usize)> = cfg
        .p_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &p)| (0..cfg.trials).map(move |t| (i, p, t)))
        .collect();
    let records = par_map(cfg.threads, cells, |(i, p, t)| {
        run_trial(cfg, p, t, supports[i].as_deref())
    })?;
    let covers = cfg
        .p_grid
        .iter()
        .zip(&supports)
        .map(|(&p, s)| support_cover(cfg, p, s.as_deref()))
        .collect::<LabResult<_>>()?;
    Ok((records, covers))
}

pub fn record_table(records: &[GeneralizationRecord]) -> Table {
    let mut t = Table::new(&["p", "trial", "pred_error", "bound", "within"]);
    for r in records {
        t.push(vec![cell(r.p), cell(r.trial), cell(r.pred_error), cell(r.bound), cell(r.within)]);
    }
    t
}

pub fn detail_table(records: &[GeneralizationRecord]) -> Table {
    let mut t = Table::new(&["p", "trial", "pred_error_raw", "seen_in_sample", "converged"]);
    for r in records {
        t.push(vec![
            cell(r.p),
            cell(r.trial),
            cell(r.pred_error_raw),
            cell(r.seen_in_sample),
            cell(r.converged),
        ]);
    }
    t
}

pub fn summary_table(
    cfg: &ExperimentConfig,
    records: &[GeneralizationRecord],
    covers: &[Option<SupportCover>],
) -> Table {
    let mut t = Table::new(&[
        "p",
        "trials",
        "converged",
        "median_pred_error",
        "max_pred_error_seen",
        "bound",
        "regime_ok",
        "within_frac",
        "n_cover",
        "p_min_hat",
        "sample_threshold",
        "sample_condition_ok",
    ]);
    for (&p, cover) in cfg.p_grid.iter().zip(covers) {
        let rs: Vec<&GeneralizationRecord> = records.iter().filter(|r| r.p == p).collect();
        let pred: Vec<f64> = rs.iter().map(|r| r.pred_error).collect();
        let seen_max = rs
            .iter()
            .filter(|r| r.seen_in_sample)
            .map(|r| r.pred_error)
            .fold(f64::NAN, f64::max);
        let bound = rs.first().map(|r| r.bound).unwrap_or(f64::NAN);
        let within = rs.iter().filter(|r| r.within).count() as f64 / rs.len() as f64;
        let (n_cover, p_min, thr) = match cover {
            Some(c) => (cell(c.n_cover), cell(c.p_min_hat), c.sample_threshold),
            None => ("NaN".into(), cell(f64::NAN), f64::NAN),
        };
        t.push(vec![
            cell(p),
            cell(rs.len()),
            cell(rs.iter().filter(|r| r.converged).count()),
            cell(median(&pred)),
            cell(seen_max),
            cell(bound),
            cell(rs.iter().all(|r| r.bound.is_finite())),
            cell(within),
            n_cover,
            p_min,
            cell(thr),
            cell(cfg.n as f64 >= thr),
        ]);
    }
    t
}

pub fn report(cfg: &ExperimentConfig) -> LabResult<Report> {
    let (records, covers) = run_generalization(cfg)?;
    Ok(Report {
        summary: summary_table(cfg, &records, &covers),
        records: record_table(&records),
        extra_tables: vec![("details.csv".into(), detail_table(&records))],
        extra_json: Vec::new(),
        meta: json!({}),
    })
}
