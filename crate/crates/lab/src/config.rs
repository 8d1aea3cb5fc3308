use std::path::{Path, PathBuf};

use benign_core::bounds::{BoundParams, MAX_EXACT_COUPONS};
use benign_core::datagen::{DesignKind, NoiseFamily, NoiseKind};
use benign_core::model::{make_loss, make_ridge_function, LinkKind, LossKind, LossSpec, RidgeFunction};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Sweep,
    Rmt,
    Coupon,
    Generalization,
    Calibrate,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Sweep => "sweep",
            Experiment::Rmt => "rmt",
            Experiment::Coupon => "coupon",
            Experiment::Generalization => "generalization",
            Experiment::Calibrate => "calibrate",
        }
    }
}

/// Starting point of the Newton flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Start at `θ*`.
    #[default]
    Warm,
    /// Start at zero.
    Cold,
}

/// One experiment campaign, read from JSON with snake_case keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub p_grid: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub ridge_kind: LinkKind,
    #[serde(default)]
    pub ridge_param: f64,
    #[serde(default)]
    pub loss_kind: LossKind,
    /// Pseudo-Huber scale; ignored by the quadratic loss.
    #[serde(default = "one")]
    pub loss_param: f64,
    #[serde(default)]
    pub dist_kind: DesignKind,
    #[serde(default)]
    pub noise_kind: NoiseFamily,
    #[serde(default)]
    pub noise_scale: f64,
    #[serde(default = "one")]
    pub theta_star_norm: f64,
    #[serde(default)]
    pub bp: BoundParams<f64>,
    pub master_seed: u64,
    pub output_path: PathBuf,
    #[serde(default = "one_usize")]
    pub threads: usize,
    #[serde(default)]
    pub init: Init,
    /// Fresh draws per population-risk estimate.
    #[serde(default = "default_risk_samples")]
    pub risk_samples: usize,
    /// `α` values compared against the singular value bounds (rmt).
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    /// Coupon probability vectors (coupon).
    #[serde(default = "default_coupon_probs")]
    pub coupon_probs: Vec<Vec<f64>>,
    /// Simulated collections per probability vector (coupon).
    #[serde(default = "default_coupon_runs")]
    pub coupon_runs: usize,
    /// Chebyshev multiplier `t` (coupon).
    #[serde(default = "default_chebyshev_t")]
    pub chebyshev_t: f64,
    /// `ε` of the `ε√p` cover (generalization).
    #[serde(default = "default_cover_eps")]
    pub cover_eps: f64,
    /// When set, design rows are drawn uniformly from this many fixed atoms
    /// (generalization).
    #[serde(default)]
    pub support_atoms: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_risk_samples() -> usize {
    200
}

fn default_alpha_grid() -> Vec<f64> {
    vec![0.1, 0.25, 0.5]
}

fn default_coupon_probs() -> Vec<Vec<f64>> {
    vec![
        vec![1.0],
        vec![0.5, 0.5],
        vec![1.0 / 3.0; 3],
        vec![0.2; 5],
    ]
}

fn default_coupon_runs() -> usize {
    100_000
}

fn default_chebyshev_t() -> f64 {
    2.0
}

fn default_cover_eps() -> f64 {
    0.25
}

/// Fewest trials accepted by `calibrate`.
pub const MIN_CALIBRATION_TRIALS: usize = 200;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> LabResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> LabResult<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.p_grid.is_empty() {
            return bad("p_grid must not be empty".into());
        }
        if self.p_grid.contains(&0) {
            return bad("p_grid entries must be at least 1".into());
        }
        if self.p_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("p_grid must be strictly increasing, got {:?}", self.p_grid));
        }
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if !(self.theta_star_norm >= 0.0 && self.theta_star_norm.is_finite()) {
            return bad(format!("theta_star_norm must be >= 0, got {}", self.theta_star_norm));
        }
        if self.risk_samples == 0 {
            return bad("risk_samples must be at least 1".into());
        }
        self.noise()?;
        self.ridge()?;
        self.loss()?;
        self.bp.validate().map_err(|e| LabError::Config(format!("bp: {e}")))?;
        match self.experiment {
            Experiment::Rmt => {
                if self.alpha_grid.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
                    return bad("alpha_grid entries must lie in (0, 1)".into());
                }
            }
            Experiment::Coupon => {
                if self.coupon_probs.is_empty() {
                    return bad("coupon_probs must not be empty".into());
                }
                for probs in &self.coupon_probs {
                    if probs.is_empty() || probs.len() > MAX_EXACT_COUPONS {
                        return bad(format!(
                            "coupon vectors need 1..={MAX_EXACT_COUPONS} entries, got {}",
                            probs.len()
                        ));
                    }
                    if probs.iter().any(|p| !(*p > 0.0)) {
                        return bad(format!("coupon probabilities must be positive: {probs:?}"));
                    }
                    let total: f64 = probs.iter().sum();
                    if (total - 1.0).abs() > 1e-10 {
                        return bad(format!("coupon probabilities sum to {total}: {probs:?}"));
                    }
                }
                if self.coupon_runs == 0 {
                    return bad("coupon_runs must be at least 1".into());
                }
                if !(self.chebyshev_t > 0.0 && self.chebyshev_t.is_finite()) {
                    return bad(format!("chebyshev_t must be positive, got {}", self.chebyshev_t));
                }
            }
            Experiment::Generalization => {
                if let Some(&p) = self.p_grid.iter().find(|&&p| p <= self.n) {
                    return bad(format!("generalization needs p > n, got p={p} with n={}", self.n));
                }
                if !(self.cover_eps >= 0.0 && self.cover_eps.is_finite()) {
                    return bad(format!("cover_eps must be >= 0, got {}", self.cover_eps));
                }
                if self.support_atoms == Some(0) {
                    return bad("support_atoms must be at least 1".into());
                }
            }
            Experiment::Calibrate => {
                if self.trials < MIN_CALIBRATION_TRIALS {
                    return Err(LabError::InsufficientTrials {
                        got: self.trials,
                        need: MIN_CALIBRATION_TRIALS,
                    });
                }
            }
            Experiment::Sweep => {}
        }
        Ok(())
    }

    pub fn noise(&self) -> LabResult<NoiseKind> {
        NoiseKind::from_parts(self.noise_kind, self.noise_scale)
            .map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn ridge(&self) -> LabResult<RidgeFunction<f64>> {
        make_ridge_function(self.ridge_kind, self.ridge_param)
            .map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn loss(&self) -> LabResult<LossSpec<f64>> {
        make_loss(self.loss_kind, self.loss_param).map_err(|e| LabError::Config(e.to_string()))
    }
}
