use benign_core::datagen::{sample_design, sample_theta_star, synthesize, DesignKind, NoiseKind};
use benign_core::model::{make_loss, make_ridge_function, LinkKind, LossKind, LossSpec, RidgeFunction};
use benign_core::risk::{gradient, hessian, RiskContext};
use benign_core::rng::sub_seed;
use benign_core::solver::{
    closed_form_linear, min_norm_projection, neuberger_direction, newton_flow, project_rowspace,
    svd_factors, NewtonOptions, Regime,
};
use benign_core::Dataset64;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn dataset(n: usize, p: usize, ridge: RidgeFunction<f64>, sigma: f64, seed: u64) -> Dataset64 {
    let design = sample_design(n, p, DesignKind::Rademacher, sub_seed(seed, 1)).unwrap();
    let star = sample_theta_star(p, 1.0, sub_seed(seed, 2)).unwrap();
    synthesize(design, star, ridge, NoiseKind::Gaussian { sigma }, sub_seed(seed, 3)).unwrap()
}

fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn newton_matches_closed_form_in_both_regimes() {
    for (n, p) in [(40, 10), (10, 40)] {
        let regime = Regime::for_dims(n, p);
        for seed in 0..50u64 {
            let ds = dataset(n, p, RidgeFunction::linear(), 0.5, seed);
            let ctx = RiskContext::from_dataset(&ds, LossSpec::quadratic());
            let sp = newton_flow(&ctx, &ds.theta_star, &NewtonOptions::default(), regime).unwrap();
            assert!(sp.converged, "seed {seed} ({n},{p}) did not converge");
            let est = match regime {
                Regime::Under => sp.theta_hat.clone(),
                Regime::Over => min_norm_projection(ds.x(), &sp.theta_hat).unwrap(),
            };
            let oracle = closed_form_linear(&ctx).unwrap();
            let e = rel(&est, &oracle);
            assert!(e <= 1e-6, "seed {seed} ({n},{p}): rel err {e:e}");
        }
    }
}

#[test]
fn linear_quadratic_gradient_never_increases() {
    for (n, p) in [(60, 12), (12, 60)] {
        let ds = dataset(n, p, RidgeFunction::linear(), 1.0, 9);
        let ctx = RiskContext::from_dataset(&ds, LossSpec::quadratic());
        let init = DVector::zeros(p);
        let sp = newton_flow(&ctx, &init, &NewtonOptions::default(), Regime::for_dims(n, p)).unwrap();
        assert!(sp.converged);
        assert_eq!(sp.grad_increases, 0);
        assert_eq!(sp.trace.len(), sp.iterations + 1);
    }
}

#[test]
fn directions_solve_the_hessian_system() {
    let links = [(LinkKind::Linear, 0.0), (LinkKind::TanhTilt, 0.5), (LinkKind::ScaledSoftsign, 0.5)];
    let losses = [(LossKind::Quadratic, 0.0), (LossKind::PseudoHuber, 1.0)];
    for (n, p) in [(30, 8), (8, 30)] {
        let regime = Regime::for_dims(n, p);
        for (li, &(lk, la)) in links.iter().enumerate() {
            for (oi, &(ok, oa)) in losses.iter().enumerate() {
                let ridge = make_ridge_function(lk, la).unwrap();
                let loss = make_loss(ok, oa).unwrap();
                let ds = dataset(n, p, ridge, 0.3, (li * 10 + oi) as u64);
                let ctx = RiskContext::from_dataset(&ds, loss);
                let theta = &ds.theta_star * 0.7;
                let svd = svd_factors(ds.x()).unwrap();
                let d = neuberger_direction(&ctx, &theta, &svd, regime).unwrap();
                let g = gradient(&ctx, &theta).unwrap();
                let h = hessian(&ctx, &theta).unwrap().h.unwrap();
                let res = (&h * &d + &g).norm() / g.norm();
                assert!(res <= 1e-8, "({n},{p}) link {li} loss {oi}: residual {res:e}");
                // the step never leaves the row space
                assert!((project_rowspace(&svd, &d) - &d).norm() <= 1e-10 * d.norm());
            }
        }
    }
}

#[test]
fn overparametrised_flow_ignores_null_space_component() {
    let (n, p) = (8, 30);
    let ridge = make_ridge_function(LinkKind::TanhTilt, 0.5).unwrap();
    let loss = make_loss(LossKind::PseudoHuber, 1.0).unwrap();
    let ds = dataset(n, p, ridge, 0.2, 5);
    let ctx = RiskContext::from_dataset(&ds, loss);
    let svd = svd_factors(ds.x()).unwrap();
    let base = project_rowspace(&svd, &ds.theta_star);
    let null = &ds.theta_star - &base;
    let opts = NewtonOptions::default();
    let a = newton_flow(&ctx, &base, &opts, Regime::Over).unwrap();
    let b = newton_flow(&ctx, &ds.theta_star, &opts, Regime::Over).unwrap();
    assert!(a.converged && b.converged);
    let pa = min_norm_projection(ds.x(), &a.theta_hat).unwrap();
    let pb = min_norm_projection(ds.x(), &b.theta_hat).unwrap();
    assert!(rel(&pa, &pb) <= 1e-8);
    assert!(rel(&(&b.theta_hat - &a.theta_hat), &null) <= 1e-8);
    let fit = ds.x() * &pb;
    let resid = DVector::from_fn(n, |i, _| ds.y[i] - ridge.value(fit[i]));
    assert!(resid.amax() <= 1e-6 * (1.0 + ds.y.amax()));
}

fn pinv_projection(x: &DMatrix<f64>, theta: &DVector<f64>) -> DVector<f64> {
    let gram = x * x.transpose();
    let coef = gram.lu().solve(&(x * theta)).unwrap();
    x.transpose() * coef
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_matches_gram_oracle(n in 2usize..8, extra in 1usize..20, seed in any::<u64>()) {
        let p = n + extra;
        let design = sample_design::<f64>(n, p, DesignKind::SphereUniform, seed).unwrap();
        let theta = sample_theta_star(p, 2.0, seed ^ 1).unwrap();
        let got = min_norm_projection(&design.x, &theta).unwrap();
        let want = pinv_projection(&design.x, &theta);
        prop_assert!(rel(&got, &want) <= 1e-9);
        // idempotent and fitted values unchanged
        let again = min_norm_projection(&design.x, &got).unwrap();
        prop_assert!(rel(&again, &got) <= 1e-10);
        prop_assert!((&design.x * &got - &design.x * &theta).norm() <= 1e-9 * (&design.x * &theta).norm().max(1.0));
        prop_assert!(got.norm() <= theta.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn svd_reconstructs(n in 1usize..12, p in 1usize..12, seed in any::<u64>()) {
        let design = sample_design::<f64>(n, p, DesignKind::Rademacher, seed).unwrap();
        let svd = svd_factors(&design.x).unwrap();
        let err = (svd.reconstruct() - &design.x).norm();
        prop_assert!(err <= 1e-10 * design.x.norm());
        prop_assert!(svd.sigma.iter().zip(svd.sigma.iter().skip(1)).all(|(a, b)| a >= b));
        prop_assert_eq!(svd.k(), n.min(p));
    }
}

#[test]
fn svd_of_rank_deficient_wide_matrix() {
    let x = DMatrix::from_row_slice(3, 4, &[-1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
    for a in [x.clone(), x.transpose()] {
        let svd = svd_factors(&a).unwrap();
        assert!((svd.reconstruct() - &a).norm() <= 1e-12);
        assert!((svd.sigma[0] - 8f64.sqrt()).abs() <= 1e-12);
        assert!((svd.sigma[1] - 2.0).abs() <= 1e-12);
        assert_eq!(svd.rank, 2);
    }
}
