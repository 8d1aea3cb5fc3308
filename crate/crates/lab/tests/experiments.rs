use benign_core::model::LinkKind;
use benign_lab::calibrate::calibrate;
use benign_lab::coupon::run_coupon;
use benign_lab::generalization::run_generalization;
use benign_lab::rmt::run_rmt;
use benign_lab::sweep::{run_sweep, RECORD_HEADER};
use benign_lab::{execute, run, ExperimentConfig, LabError};
use serde_json::{json, Value};

fn config(v: Value) -> ExperimentConfig {
    let mut base = json!({
        "experiment": "sweep",
        "n": 8,
        "p_grid": [2],
        "trials": 1,
        "master_seed": 3,
        "output_path": "unused",
    });
    for (k, val) in v.as_object().unwrap() {
        base[k] = val.clone();
    }
    ExperimentConfig::from_json(&base.to_string()).unwrap()
}

#[test]
fn noiseless_ols_recovers_theta_star() {
    for init in ["warm", "cold"] {
        let cfg = config(json!({ "noise_kind": "zero", "init": init }));
        let recs = run_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].converged);
        assert!(recs[0].est_error <= 1e-8, "{init}: {}", recs[0].est_error);
    }
}

#[test]
fn sweep_csv_has_one_row_per_trial() {
    let cfg = config(json!({
        "n": 12, "p_grid": [3, 6, 20, 40], "trials": 4,
        "noise_scale": 0.3, "ridge_kind": "tanh_tilt", "ridge_param": 0.5,
        "loss_kind": "pseudo_huber",
    }));
    let dir = tempfile::tempdir().unwrap();
    execute(&cfg, Some(dir.path())).unwrap();
    let text = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), RECORD_HEADER.join(","));
    assert_eq!(lines.count(), 16);
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    let meta: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["trials"], 4);
    assert!(meta["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn inside_ball_matches_radius_exactly() {
    let cfg = config(json!({
        "n": 200, "p_grid": [3, 5, 1200], "trials": 3, "noise_scale": 0.5,
        "bp": { "alpha": 0.3, "c_abs": 0.001 },
    }));
    for r in run_sweep(&cfg).unwrap() {
        assert_eq!(r.inside_ball, r.est_error <= r.r_theory);
        assert!(r.r_theory.is_finite());
    }
}

#[test]
fn overparametrised_linear_fits_interpolate() {
    let cfg = config(json!({ "n": 15, "p_grid": [40, 90], "trials": 5, "noise_scale": 1.0 }));
    for r in run_sweep(&cfg).unwrap() {
        assert!(r.converged);
        assert!(r.fit_resid <= 1e-6, "p={} resid {}", r.p, r.fit_resid);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let one = config(json!({ "n": 20, "p_grid": [5, 40], "trials": 6, "noise_scale": 0.5 }));
    let mut four = one.clone();
    four.threads = 4;
    assert_eq!(run(&one).unwrap().records, run(&four).unwrap().records);
}

#[test]
fn scalar_designs_have_unit_singular_value() {
    let cfg = config(json!({ "experiment": "rmt", "n": 1, "p_grid": [1], "trials": 50 }));
    let recs = run_rmt(&cfg).unwrap();
    assert!(recs.iter().all(|r| r.s_min == 1.0 && r.s_max == 1.0));
    let report = run(&cfg).unwrap();
    assert_eq!(report.records.header, ["n", "p", "trial", "s_min", "s_max"]);
}

#[test]
fn coupon_simulation_agrees_with_exact_moments() {
    let cfg = config(json!({
        "experiment": "coupon",
        "coupon_probs": [[1.0], [0.5, 0.5], [0.2, 0.2, 0.2, 0.2, 0.2]],
        "coupon_runs": 100000,
    }));
    let recs = run_coupon(&cfg).unwrap();
    assert_eq!((recs[0].min_draws, recs[0].max_draws), (1, 1));
    assert_eq!(recs[0].mc_mean, 1.0);
    assert_eq!(recs[1].exact_mean, 3.0);
    for r in &recs {
        assert!(r.mean_rel_err() < 0.01, "k={}: {}", r.k(), r.mean_rel_err());
        assert!(r.exceed_freq <= 0.26);
    }
}

#[test]
fn generalization_interpolates_on_seen_atoms() {
    let cfg = config(json!({
        "experiment": "generalization", "n": 30, "p_grid": [60, 120], "trials": 40,
        "noise_kind": "zero", "support_atoms": 5, "cover_eps": 0.01,
    }));
    let (recs, covers) = run_generalization(&cfg).unwrap();
    let seen: Vec<_> = recs.iter().filter(|r| r.seen_in_sample).collect();
    assert!(!seen.is_empty());
    for r in seen {
        assert!(r.pred_error <= 1e-6, "p={} trial={}: {}", r.p, r.trial, r.pred_error);
    }
    for c in covers {
        let c = c.unwrap();
        assert_eq!(c.n_cover, 5);
        assert_eq!(c.p_min_hat, 0.2);
    }
    let report = run(&cfg).unwrap();
    assert_eq!(report.records.header, ["p", "trial", "pred_error", "bound", "within"]);
}

#[test]
fn null_model_predicts_exactly() {
    let cfg = config(json!({
        "experiment": "generalization", "n": 10, "p_grid": [30], "trials": 5,
        "noise_kind": "zero", "theta_star_norm": 0.0,
        "ridge_kind": "scaled_softsign", "ridge_param": 0.4,
    }));
    let (recs, _) = run_generalization(&cfg).unwrap();
    assert!(recs.iter().all(|r| r.pred_error == 0.0 && r.converged));
}

#[test]
fn calibration_constants_are_order_one() {
    let cfg = config(json!({
        "experiment": "calibrate", "n": 60, "p_grid": [2, 4], "trials": 200,
        "noise_scale": 0.5, "bp": { "k_eps": 0.5 },
    }));
    let cal = calibrate(&cfg).unwrap();
    let c = &cal.constants;
    assert!(c.c_kx > 0.0 && c.c_kx < 4.0, "{}", c.c_kx);
    assert!(c.c_kx_cols.is_nan());
    assert!(c.c_kx_small > 0.0);
    assert!(c.prefactor >= c.prefactor_ls);
    assert!(c.prefactor_ci_low <= c.prefactor_ls && c.prefactor_ls <= c.prefactor_ci_high);
    assert!(c.prefactor_r2.is_finite());
    let bp = c.bp.unwrap();
    assert!((bp.prefactor() - c.prefactor).abs() <= 1e-12 * c.prefactor);
    let json = serde_json::to_value(c).unwrap();
    for key in ["c_abs", "c_kx", "c_kx_small", "prefactor_r2"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn noiseless_calibration_has_vanishing_prefactor() {
    let cfg = config(json!({
        "experiment": "calibrate", "n": 40, "p_grid": [2, 3], "trials": 200, "noise_kind": "zero",
    }));
    let cal = calibrate(&cfg).unwrap();
    assert!(cal.constants.prefactor < 1e-8, "{}", cal.constants.prefactor);
}

#[test]
fn calibration_needs_enough_trials() {
    let text = json!({
        "experiment": "calibrate", "n": 40, "p_grid": [2], "trials": 199,
        "master_seed": 1, "output_path": "x",
    });
    let err = ExperimentConfig::from_json(&text.to_string()).unwrap_err();
    assert!(matches!(err, LabError::InsufficientTrials { got: 199, need: 200 }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn invalid_configs_are_rejected() {
    let base = json!({
        "experiment": "sweep", "n": 10, "p_grid": [2, 5], "trials": 1,
        "master_seed": 1, "output_path": "x",
    });
    let mutate = |k: &str, v: Value| {
        let mut c = base.clone();
        c[k] = v;
        ExperimentConfig::from_json(&c.to_string())
    };
    assert!(ExperimentConfig::from_json(&base.to_string()).is_ok());
    assert!(mutate("bogus", json!(1)).is_err());
    assert!(mutate("p_grid", json!([5, 2])).is_err());
    assert!(mutate("p_grid", json!([])).is_err());
    assert!(mutate("trials", json!(0)).is_err());
    let mut tilt = base.clone();
    tilt["ridge_kind"] = json!("tanh_tilt");
    tilt["ridge_param"] = json!(1.5);
    assert!(ExperimentConfig::from_json(&tilt.to_string()).is_err());
    assert!(mutate("ridge_kind", json!("cubic")).is_err());
    assert!(mutate("bp", json!({ "alpha": 1.0 })).is_err());
    assert!(mutate("bp", json!({ "unknown": 1.0 })).is_err());
    assert!(mutate("noise_scale", json!(-1.0)).is_err());
    let mut g = base.clone();
    g["experiment"] = json!("generalization");
    assert!(ExperimentConfig::from_json(&g.to_string()).is_err());
    let cfg = ExperimentConfig::from_json(&base.to_string()).unwrap();
    assert_eq!(cfg.ridge_kind, LinkKind::Linear);
    assert_eq!(cfg.threads, 1);
}
