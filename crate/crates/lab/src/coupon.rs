//! Coupon collector moments: exact inclusion–exclusion against simulation.

use benign_core::bounds::{coupon_bounds, coupon_moments, coupon_sample_threshold};
use benign_core::rng::{rng_from_seed, sub_seed};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Exp;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::output::{cell, Table};
use crate::{cell_seed, par_map, Report};

/// Simulated collections per deterministic work unit.
pub const CHUNK: usize = 10_000;

const DRAWS_TAG: u64 = 11;
const CLOCK_TAG: u64 = 12;

/// Sums over one chunk of simulated collections.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChunkSums {
    pub runs: u64,
    pub sum_n: u128,
    pub sum_n2: u128,
    pub sum_t2: f64,
    pub exceed: u64,
    pub min_n: u64,
    pub max_n: u64,
}

/// Simulates `runs` collections: the draw count `N` and the completion time
/// `T = max_k E_k` with `E_k ~ Exp(p_k)`.
pub fn simulate_chunk(probs: &[f64], runs: usize, threshold: f64, seed: u64) -> LabResult<ChunkSums> {
    let pick = WeightedIndex::new(probs).map_err(|e| LabError::Config(e.to_string()))?;
    let mut rng = rng_from_seed(sub_seed(seed, DRAWS_TAG));
    let mut clock = rng_from_seed(sub_seed(seed, CLOCK_TAG));
    let clocks: Vec<Exp<f64>> = probs
        .iter()
        .map(|&p| Exp::new(p).map_err(|e| LabError::Config(e.to_string())))
        .collect::<LabResult<_>>()?;
    let k = probs.len();
    let mut seen = vec![false; k];
    let mut out = ChunkSums {
        min_n: u64::MAX,
        ..Default::default()
    };
    for _ in 0..runs {
        seen.iter_mut().for_each(|s| *s = false);
        let mut missing = k;
        let mut draws = 0u64;
        while missing > 0 {
            let j = pick.sample(&mut rng);
            draws += 1;
            if !seen[j] {
                seen[j] = true;
                missing -= 1;
            }
        }
        let t = clocks
            .iter()
            .map(|e| e.sample(&mut clock))
            .fold(0.0, f64::max);
        out.runs += 1;
        out.sum_n += u128::from(draws);
        out.sum_n2 += u128::from(draws) * u128::from(draws);
        out.sum_t2 += t * t;
        out.exceed += u64::from(draws as f64 > threshold);
        out.min_n = out.min_n.min(draws);
        out.max_n = out.max_n.max(draws);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouponRecord {
    pub index: usize,
    pub probs: Vec<f64>,
    pub runs: usize,
    pub exact_mean: f64,
    pub mc_mean: f64,
    pub exact_second: f64,
    pub mc_second: f64,
    pub poissonized_second: f64,
    pub mc_time_second: f64,
    pub mean_bound: f64,
    pub var_bound: f64,
    pub threshold: f64,
    pub exceed_freq: f64,
    pub chebyshev_limit: f64,
    pub min_draws: u64,
    pub max_draws: u64,
}

impl CouponRecord {
    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn p_min(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_rel_err(&self) -> f64 {
        (self.mc_mean - self.exact_mean).abs() / self.exact_mean
    }

    pub fn second_rel_err(&self) -> f64 {
        (self.mc_second - self.exact_second).abs() / self.exact_second
    }

    pub fn time_second_rel_err(&self) -> f64 {
        (self.mc_time_second - self.poissonized_second).abs() / self.poissonized_second
    }
}

pub fn run_coupon(cfg: &ExperimentConfig) -> LabResult<Vec<CouponRecord>> {
    let mut out = Vec::with_capacity(cfg.coupon_probs.len());
    for (index, probs) in cfg.coupon_probs.iter().enumerate() {
        let exact = coupon_moments(probs)?;
        let (mean_bound, var_bound) = coupon_bounds(probs)?;
        let p_min = probs.iter().copied().fold(f64::INFINITY, f64::min);
        let threshold = coupon_sample_threshold(probs.len() as u64, p_min, cfg.chebyshev_t)?;
        let chunks: Vec<(usize, usize)> = (0..cfg.coupon_runs.div_ceil(CHUNK))
            .map(|c| (c, CHUNK.min(cfg.coupon_runs - c * CHUNK)))
            .collect();
        let sums = par_map(cfg.threads, chunks, |(c, runs)| {
            simulate_chunk(probs, runs, threshold, cell_seed(cfg.master_seed, index, c))
        })?;
        let mut total = ChunkSums {
            min_n: u64::MAX,
            ..Default::default()
        };
        for s in &sums {
            total.runs += s.runs;
            total.sum_n += s.sum_n;
            total.sum_n2 += s.sum_n2;
            total.sum_t2 += s.sum_t2;
            total.exceed += s.exceed;
            total.min_n = total.min_n.min(s.min_n);
            total.max_n = total.max_n.max(s.max_n);
        }
        let runs = total.runs as f64;
        out.push(CouponRecord {
            index,
            probs: probs.clone(),
            runs: cfg.coupon_runs,
            exact_mean: exact.mean,
            mc_mean: total.sum_n as f64 / runs,
            exact_second: exact.second_moment,
            mc_second: total.sum_n2 as f64 / runs,
            poissonized_second: exact.poissonized_second_moment,
            mc_time_second: total.sum_t2 / runs,
            mean_bound,
            var_bound,
            threshold,
            exceed_freq: total.exceed as f64 / runs,
            chebyshev_limit: 1.0 / (cfg.chebyshev_t * cfg.chebyshev_t),
            min_draws: total.min_n,
            max_draws: total.max_n,
        });
    }
    Ok(out)
}

pub fn record_table(records: &[CouponRecord]) -> Table {
    let mut t = Table::new(&[
        "index",
        "k",
        "p_min",
        "runs",
        "exact_mean",
        "mc_mean",
        "exact_second",
        "mc_second",
        "poissonized_second",
        "mc_time_second",
        "mean_bound",
        "var_bound",
        "threshold",
        "exceed_freq",
        "chebyshev_limit",
        "min_draws",
        "max_draws",
    ]);
    for r in records {
        t.push(vec![
            cell(r.index),
            cell(r.k()),
            cell(r.p_min()),
            cell(r.runs),
            cell(r.exact_mean),
            cell(r.mc_mean),
            cell(r.exact_second),
            cell(r.mc_second),
            cell(r.poissonized_second),
            cell(r.mc_time_second),
            cell(r.mean_bound),
            cell(r.var_bound),
            cell(r.threshold),
            cell(r.exceed_freq),
            cell(r.chebyshev_limit),
            cell(r.min_draws),
            cell(r.max_draws),
        ]);
    }
    t
}

/// Relative agreement demanded of the simulated moments.
pub const MOMENT_TOLERANCE: f64 = 0.01;
/// Allowance on top of `1/t²` for the simulated exceedance frequency.
pub const CHEBYSHEV_SLACK: f64 = 0.01;

pub fn summary_table(records: &[CouponRecord]) -> Table {
    let mut t = Table::new(&[
        "index",
        "k",
        "mean_rel_err",
        "second_rel_err",
        "time_second_rel_err",
        "moments_ok",
        "bounds_ok",
        "chebyshev_ok",
    ]);
    for r in records {
        let moments_ok = r.mean_rel_err() <= MOMENT_TOLERANCE && r.second_rel_err() <= MOMENT_TOLERANCE;
        let var = r.exact_second - r.exact_mean * r.exact_mean;
        let bounds_ok = r.exact_mean <= r.mean_bound && var <= r.var_bound;
        t.push(vec![
            cell(r.index),
            cell(r.k()),
            cell(r.mean_rel_err()),
            cell(r.second_rel_err()),
            cell(r.time_second_rel_err()),
            cell(moments_ok),
            cell(bounds_ok),
            cell(r.exceed_freq <= r.chebyshev_limit + CHEBYSHEV_SLACK),
        ]);
    }
    t
}

pub fn report(cfg: &ExperimentConfig) -> LabResult<Report> {
    let records = run_coupon(cfg)?;
    Ok(Report {
        summary: summary_table(&records),
        records: record_table(&records),
        extra_tables: Vec::new(),
        extra_json: Vec::new(),
        meta: json!({}),
    })
}
