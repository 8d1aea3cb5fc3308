//! Monte Carlo calibration of the unspecified constants `C_{K_X}`, `c_{K_X}`
//! and the composite radius prefactor `6√C·C_ℓ″·C_f′·K_ε/δ`.

use benign_core::bounds::{smin_bound, BoundParams, Orientation};
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::output::{cell, Table};
use crate::rmt::orientation_for;
use crate::stats::{fit_through_origin, median, quantile, OriginFit};
use crate::sweep::{run_sweep, TrialRecord};
use crate::Report;

/// Quantile of `(√big − s_min)/√small` taken as `C_{K_X}`.
pub const C_KX_QUANTILE: f64 = 0.99;
/// Two-sided 95% normal quantile for the slope interval.
const Z95: f64 = 1.959_963_984_540_054;

fn dims(n: usize, p: usize) -> (f64, f64) {
    let (big, small) = if n >= p { (n, p) } else { (p, n) };
    (big as f64, small as f64)
}

/// `(√big − s_min)/√small`.
pub fn c_kx_ratio(n: usize, p: usize, s_min: f64) -> f64 {
    let (big, small) = dims(n, p);
    (big.sqrt() - s_min) / small.sqrt()
}

/// `√small/((1−α)√big − C√small)`, or NaN when the denominator is not positive.
pub fn radius_shape(n: usize, p: usize, alpha: f64, c_kx: f64) -> f64 {
    let (big, small) = dims(n, p);
    let denom = (1.0 - alpha) * big.sqrt() - c_kx * small.sqrt();
    if denom > 0.0 {
        small.sqrt() / denom
    } else {
        f64::NAN
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constants {
    /// `C_{K_X}` from row-orientation cells (`n ≥ p`); NaN without such cells.
    pub c_kx_rows: f64,
    /// `C_{K_X}` from column-orientation cells (`p > n`).
    pub c_kx_cols: f64,
    /// Larger of the two, used in both regimes.
    pub c_kx: f64,
    /// `c_{K_X}` solved from the smallest-singular-value failure rates; NaN
    /// when no cell has a positive `s_min` bound.
    pub c_kx_small: f64,
    /// Least-squares slope of `est_error` on the radius shape (no intercept).
    pub prefactor_ls: f64,
    pub prefactor_ci_low: f64,
    pub prefactor_ci_high: f64,
    pub prefactor_r2: f64,
    /// Largest observed `est_error / shape`; the prefactor used for coverage.
    pub prefactor: f64,
    /// `C` implied by `prefactor` and the other entries of `bp`; NaN when
    /// `K_ε = 0`.
    pub c_abs: f64,
    pub samples: usize,
    /// Calibrated bound parameters, absent when they do not validate.
    pub bp: Option<BoundParams<f64>>,
}

pub struct Calibration {
    pub records: Vec<TrialRecord>,
    pub constants: Constants,
    pub fit: OriginFit,
}

pub fn calibrate(cfg: &ExperimentConfig) -> LabResult<Calibration> {
    cfg.validate()?;
    let records = run_sweep(cfg)?;
    let n = cfg.n;
    let alpha = cfg.bp.alpha;

    let pooled = |orient: Orientation| -> f64 {
        let r: Vec<f64> = records
            .iter()
            .filter(|r| orientation_for(n, r.p) == orient)
            .map(|r| c_kx_ratio(n, r.p, r.s_min))
            .collect();
        quantile(&r, C_KX_QUANTILE)
    };
    let c_kx_rows = pooled(Orientation::Rows);
    let c_kx_cols = pooled(Orientation::Columns);
    let c_kx = [c_kx_rows, c_kx_cols]
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(f64::NAN, f64::max);

    // c_{K_X} from 2exp(−c·α²·big) against the failure rate of the s_min
    // bound: a cell with failures at rate f caps c at −ln(f/2)/(α²·big); a
    // cell without failures only supports c ≥ −ln(1/(2·trials))/(α²·big).
    let mut upper = f64::INFINITY;
    let mut lower = f64::NAN;
    for &p in &cfg.p_grid {
        let bound = smin_bound(orientation_for(n, p), alpha, c_kx, n, p);
        if !(bound > 0.0) {
            continue;
        }
        let s: Vec<f64> = records.iter().filter(|r| r.p == p).map(|r| r.s_min).collect();
        let fails = s.iter().filter(|&&v| v < bound).count();
        let (big, _) = dims(n, p);
        let scale = alpha * alpha * big;
        if fails > 0 {
            let freq = fails as f64 / s.len() as f64;
            upper = upper.min(-(freq / 2.0).min(1.0).ln() / scale);
        } else {
            lower = lower.max(-(0.5 / s.len() as f64).ln() / scale);
        }
    }
    let c_kx_small = if upper.is_finite() { upper } else { lower };

    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in &records {
        let z = radius_shape(n, r.p, alpha, c_kx);
        if z.is_finite() && r.est_error.is_finite() {
            xs.push(z);
            ys.push(r.est_error);
        }
    }
    let fit = fit_through_origin(&xs, &ys);
    let prefactor = xs
        .iter()
        .zip(&ys)
        .map(|(z, e)| e / z)
        .fold(f64::NAN, f64::max);
    let (lo, hi) = fit.interval(Z95);

    let mut bp = BoundParams {
        c_kx,
        c_kx_small,
        ..cfg.bp
    }
    .with_prefactor(prefactor);
    if !bp.c_abs.is_finite() {
        bp.c_abs = f64::NAN;
    }
    let c_abs = bp.c_abs;
    let constants = Constants {
        c_kx_rows,
        c_kx_cols,
        c_kx,
        c_kx_small,
        prefactor_ls: fit.slope,
        prefactor_ci_low: lo,
        prefactor_ci_high: hi,
        prefactor_r2: fit.r2,
        prefactor,
        c_abs,
        samples: xs.len(),
        bp: bp.validate().ok().map(|_| bp),
    };
    Ok(Calibration {
        records,
        constants,
        fit,
    })
}

pub fn record_table(cfg: &ExperimentConfig, cal: &Calibration) -> Table {
    let mut t = Table::new(&["p", "trial", "regime", "s_min", "c_kx_ratio", "est_error", "shape", "ratio"]);
    for r in &cal.records {
        let z = radius_shape(cfg.n, r.p, cfg.bp.alpha, cal.constants.c_kx);
        t.push(vec![
            cell(r.p),
            cell(r.trial),
            cell(r.regime.as_str()),
            cell(r.s_min),
            cell(c_kx_ratio(cfg.n, r.p, r.s_min)),
            cell(r.est_error),
            cell(z),
            cell(r.est_error / z),
        ]);
    }
    t
}

pub fn summary_table(cfg: &ExperimentConfig, cal: &Calibration) -> Table {
    let mut t = Table::new(&[
        "p",
        "regime",
        "trials",
        "q99_c_kx_ratio",
        "median_est_error",
        "shape",
        "median_ratio",
        "max_ratio",
        "smin_fail_freq",
    ]);
    let c = &cal.constants;
    for &p in &cfg.p_grid {
        let rs: Vec<&TrialRecord> = cal.records.iter().filter(|r| r.p == p).collect();
        let ratios: Vec<f64> = rs.iter().map(|r| c_kx_ratio(cfg.n, p, r.s_min)).collect();
        let est: Vec<f64> = rs.iter().map(|r| r.est_error).collect();
        let z = radius_shape(cfg.n, p, cfg.bp.alpha, c.c_kx);
        let scaled: Vec<f64> = est.iter().map(|e| e / z).collect();
        let bound = smin_bound(orientation_for(cfg.n, p), cfg.bp.alpha, c.c_kx, cfg.n, p);
        let fails = rs.iter().filter(|r| r.s_min < bound).count() as f64 / rs.len() as f64;
        t.push(vec![
            cell(p),
            cell(rs[0].regime.as_str()),
            cell(rs.len()),
            cell(quantile(&ratios, C_KX_QUANTILE)),
            cell(median(&est)),
            cell(z),
            cell(median(&scaled)),
            cell(scaled.iter().copied().filter(|v| v.is_finite()).fold(f64::NAN, f64::max)),
            cell(fails),
        ]);
    }
    t
}

pub fn report(cfg: &ExperimentConfig) -> LabResult<Report> {
    let cal = calibrate(cfg)?;
    let constants = serde_json::to_value(&cal.constants).unwrap_or_default();
    Ok(Report {
        records: record_table(cfg, &cal),
        summary: summary_table(cfg, &cal),
        extra_tables: Vec::new(),
        extra_json: vec![("constants.json".into(), constants)],
        meta: json!({ "trial_wall_ms": cal.records.iter().map(|r| r.wall_ms).collect::<Vec<_>>() }),
    })
}
