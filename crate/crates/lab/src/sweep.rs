//! Estimation error across a grid of `p` at fixed `n`.

use std::time::Instant;

use benign_core::bounds::{radius, success_probability, BoundParams};
use benign_core::datagen::{sample_design, sample_row, sample_theta_star, synthesize};
use benign_core::risk::{estimate_theoretical_risk, RiskContext};
use benign_core::rng::{rng_from_seed, sub_seed};
use benign_core::solver::{newton_flow_with_svd, project_rowspace, svd_factors, NewtonOptions, Regime};
use nalgebra::DVector;
use serde_json::json;

use crate::config::{ExperimentConfig, Init};
use crate::error::LabResult;
use crate::output::{cell, Table};
use crate::stats::{median, quantile, three_sigma};
use crate::{cell_seed, par_map, tags, Report};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub p: usize,
    pub trial: usize,
    pub regime: Regime,
    /// `‖θ̂ − θ*‖₂` for the flow's stationary point.
    pub est_error: f64,
    /// `|X_{n+1}ᵗ(θ̂♯ − θ*)|/√p` on a fresh row.
    pub pred_error: f64,
    /// `|X_{n+1}ᵗ(θ̂♯ − θ*)|`.
    pub pred_error_raw: f64,
    /// Monte Carlo estimate of `R(θ̂) − R(θ*)` with common random numbers.
    pub risk_gap: f64,
    /// Error radius, NaN when the regime condition fails.
    pub r_theory: f64,
    pub inside_ball: bool,
    pub s_min: f64,
    pub s_max: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `‖f(Xθ̂) − Y‖∞`.
    pub fit_resid: f64,
    pub wall_ms: f64,
}

pub const RECORD_HEADER: [&str; 14] = [
    "p",
    "trial",
    "regime",
    "est_error",
    "pred_error",
    "pred_error_raw",
    "risk_gap",
    "r_theory",
    "inside_ball",
    "s_min",
    "s_max",
    "converged",
    "iterations",
    "fit_resid",
];

impl TrialRecord {
    fn row(&self) -> Vec<String> {
        vec![
            cell(self.p),
            cell(self.trial),
            cell(self.regime.as_str()),
            cell(self.est_error),
            cell(self.pred_error),
            cell(self.pred_error_raw),
            cell(self.risk_gap),
            cell(self.r_theory),
            cell(self.inside_ball),
            cell(self.s_min),
            cell(self.s_max),
            cell(self.converged),
            cell(self.iterations),
            cell(self.fit_resid),
        ]
    }
}

/// `radius` for the cell, or NaN when its regime condition fails.
pub fn radius_or_nan(bp: &BoundParams<f64>, n: usize, p: usize) -> f64 {
    radius(Regime::for_dims(n, p), bp, n, p).unwrap_or(f64::NAN)
}

/// Fits one `(p, trial)` cell.
pub fn run_trial(cfg: &ExperimentConfig, p: usize, trial: usize) -> LabResult<TrialRecord> {
    let clock = Instant::now();
    let n = cfg.n;
    let seed = cell_seed(cfg.master_seed, p, trial);
    let ridge = cfg.ridge()?;
    let loss = cfg.loss()?;
    let noise = cfg.noise()?;
    let regime = Regime::for_dims(n, p);

    let design = sample_design::<f64>(n, p, cfg.dist_kind, sub_seed(seed, tags::DESIGN))?;
    let theta_star = sample_theta_star(p, cfg.theta_star_norm, sub_seed(seed, tags::THETA))?;
    let ds = synthesize(design, theta_star, ridge, noise, sub_seed(seed, tags::NOISE))?;
    let svd = svd_factors(ds.x())?;
    let ctx = RiskContext::from_dataset(&ds, loss);
    let init = match cfg.init {
        Init::Warm => ds.theta_star.clone(),
        Init::Cold => DVector::zeros(p),
    };
    let r_theory = radius_or_nan(&cfg.bp, n, p);
    let (s_min, s_max) = (svd.s_min(), svd.s_max());

    let mut rec = TrialRecord {
        p,
        trial,
        regime,
        est_error: f64::NAN,
        pred_error: f64::NAN,
        pred_error_raw: f64::NAN,
        risk_gap: f64::NAN,
        r_theory,
        inside_ball: false,
        s_min,
        s_max,
        converged: false,
        iterations: 0,
        fit_resid: f64::NAN,
        wall_ms: 0.0,
    };
    // a solver breakdown is recorded as a non-converged trial
    if let Ok(sp) = newton_flow_with_svd(&ctx, &init, &NewtonOptions::default(), regime, &svd) {
        let theta_hat = sp.theta_hat;
        rec.converged = sp.converged;
        rec.iterations = sp.iterations;
        rec.est_error = (&theta_hat - &ds.theta_star).norm();
        rec.inside_ball = rec.est_error <= r_theory;
        let fitted = ds.x() * &theta_hat;
        rec.fit_resid = (0..n)
            .map(|i| (ridge.value(fitted[i]) - ds.y[i]).abs())
            .fold(0.0, f64::max);

        let sharp = match regime {
            Regime::Under => theta_hat.clone(),
            Regime::Over => project_rowspace(&svd, &theta_hat),
        };
        let mut rng = rng_from_seed(sub_seed(seed, tags::TEST));
        let mut row = vec![0.0; p];
        sample_row(cfg.dist_kind, &mut rng, &mut row);
        let x_new = DVector::from_vec(row);
        rec.pred_error_raw = x_new.dot(&(&sharp - &ds.theta_star)).abs();
        rec.pred_error = rec.pred_error_raw / (p as f64).sqrt();

        let risk_seed = sub_seed(seed, tags::RISK);
        let risk = |theta: &DVector<f64>| {
            estimate_theoretical_risk(
                &ridge,
                &loss,
                theta,
                &ds.theta_star,
                cfg.dist_kind,
                noise,
                cfg.risk_samples,
                risk_seed,
            )
        };
        rec.risk_gap = risk(&theta_hat)?.mean - risk(&ds.theta_star)?.mean;
    }
    rec.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    Ok(rec)
}

/// All `(p, trial)` cells in grid order.
pub fn run_sweep(cfg: &ExperimentConfig) -> LabResult<Vec<TrialRecord>> {
    let cells: Vec<(usize, usize)> = cfg
        .p_grid
        .iter()
        .flat_map(|&p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    par_map(cfg.threads, cells, |(p, t)| run_trial(cfg, p, t))
}

/// Per-`p` summary of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub p: usize,
    pub regime: Regime,
    pub trials: usize,
    pub converged: usize,
    pub median_est_error: f64,
    pub q25_est_error: f64,
    pub q75_est_error: f64,
    pub median_pred_error: f64,
    pub median_risk_gap: f64,
    pub median_s_min: f64,
    pub r_theory: f64,
    /// Fraction of trials with `est_error ≤ r_theory`.
    pub coverage: f64,
    /// Success probability clamped to `[0, 1]`.
    pub success_prob: f64,
    pub slack: f64,
}

impl CellSummary {
    pub fn regime_ok(&self) -> bool {
        self.r_theory.is_finite()
    }
}

pub fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Vec<CellSummary> {
    cfg.p_grid
        .iter()
        .map(|&p| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.p == p).collect();
            let col = |f: fn(&TrialRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let est = col(|r| r.est_error);
            let regime = Regime::for_dims(cfg.n, p);
            let q = success_probability(regime, &cfg.bp, cfg.n, p).clamp(0.0, 1.0);
            let trials = rs.len();
            CellSummary {
                p,
                regime,
                trials,
                converged: rs.iter().filter(|r| r.converged).count(),
                median_est_error: median(&est),
                q25_est_error: quantile(&est, 0.25),
                q75_est_error: quantile(&est, 0.75),
                median_pred_error: median(&col(|r| r.pred_error)),
                median_risk_gap: median(&col(|r| r.risk_gap)),
                median_s_min: median(&col(|r| r.s_min)),
                r_theory: radius_or_nan(&cfg.bp, cfg.n, p),
                coverage: rs.iter().filter(|r| r.inside_ball).count() as f64 / trials as f64,
                success_prob: q,
                slack: three_sigma(q, trials),
            }
        })
        .collect()
}

pub const SUMMARY_HEADER: [&str; 16] = [
    "p",
    "regime",
    "trials",
    "converged",
    "median_est_error",
    "q25_est_error",
    "q75_est_error",
    "median_pred_error",
    "median_risk_gap",
    "median_s_min",
    "r_theory",
    "regime_ok",
    "coverage",
    "success_prob",
    "slack",
    "coverage_ok",
];

pub fn record_table(records: &[TrialRecord]) -> Table {
    let mut t = Table::new(&RECORD_HEADER);
    for r in records {
        t.push(r.row());
    }
    t
}

pub fn summary_table(summary: &[CellSummary]) -> Table {
    let mut t = Table::new(&SUMMARY_HEADER);
    for s in summary {
        let ok = !s.regime_ok() || s.coverage >= s.success_prob - s.slack;
        t.push(vec![
            cell(s.p),
            cell(s.regime.as_str()),
            cell(s.trials),
            cell(s.converged),
            cell(s.median_est_error),
            cell(s.q25_est_error),
            cell(s.q75_est_error),
            cell(s.median_pred_error),
            cell(s.median_risk_gap),
            cell(s.median_s_min),
            cell(s.r_theory),
            cell(s.regime_ok()),
            cell(s.coverage),
            cell(s.success_prob),
            cell(s.slack),
            cell(ok),
        ]);
    }
    t
}

pub fn report(cfg: &ExperimentConfig) -> LabResult<Report> {
    let records = run_sweep(cfg)?;
    let summary = summarize(cfg, &records);
    let wall: Vec<f64> = records.iter().map(|r| r.wall_ms).collect();
    Ok(Report {
        records: record_table(&records),
        summary: summary_table(&summary),
        extra_tables: Vec::new(),
        extra_json: Vec::new(),
        meta: json!({ "trial_wall_ms": wall }),
    })
}
