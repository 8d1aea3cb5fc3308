use benign_core::datagen::{sample_design, sample_theta_star, synthesize, DesignKind, NoiseKind};
use benign_core::model::{
    check_regularity, make_loss, make_ridge_function, Interval, LinkKind, LossKind, LossSpec,
    RidgeFunction,
};
use benign_core::risk::{empirical_risk, gradient, hessian, hessian_vec, RiskContext};
use benign_core::rng::{rng_from_seed, sub_seed};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn configs() -> Vec<(RidgeFunction<f64>, LossSpec<f64>)> {
    let links = [
        (LinkKind::Linear, 0.0),
        (LinkKind::TanhTilt, 0.5),
        (LinkKind::TanhTilt, 0.8),
        (LinkKind::ScaledSoftsign, 0.5),
        (LinkKind::ScaledSoftsign, 0.3),
    ];
    let losses = [
        (LossKind::Quadratic, 0.0),
        (LossKind::PseudoHuber, 1.0),
        (LossKind::PseudoHuber, 0.4),
        (LossKind::PseudoHuber, 2.5),
    ];
    let mut out = Vec::new();
    for (lk, la) in links {
        for (ok, oa) in losses {
            out.push((
                make_ridge_function(lk, la).unwrap(),
                make_loss(ok, oa).unwrap(),
            ));
        }
    }
    out
}

struct Case {
    x: DMatrix<f64>,
    y: DVector<f64>,
    theta: DVector<f64>,
}

fn case(ridge: RidgeFunction<f64>, seed: u64) -> Case {
    let (n, p) = (25, 6);
    let design = sample_design::<f64>(n, p, DesignKind::SphereUniform, sub_seed(seed, 1)).unwrap();
    let star = sample_theta_star(p, 0.8, sub_seed(seed, 2)).unwrap();
    let ds = synthesize(design, star, ridge, NoiseKind::Gaussian { sigma: 0.5 }, sub_seed(seed, 3))
        .unwrap();
    let mut rng = rng_from_seed(sub_seed(seed, 4));
    let theta = DVector::from_fn(p, |_, _| rng.random_range(-0.5..0.5));
    Case {
        x: ds.design.x,
        y: ds.y,
        theta,
    }
}

fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

#[test]
fn gradient_and_hessian_match_central_differences() {
    let h = 1e-5;
    for (k, (ridge, loss)) in configs().into_iter().take(20).enumerate() {
        let c = case(ridge, 1000 + k as u64);
        let ctx = RiskContext::new(&c.x, &c.y, ridge, loss).unwrap();
        let p = c.theta.len();
        let g = gradient(&ctx, &c.theta).unwrap();
        let hf = hessian(&ctx, &c.theta).unwrap();
        let hm = hf.h.clone().unwrap();
        let mut g_fd = DVector::zeros(p);
        let mut h_fd = DMatrix::zeros(p, p);
        for j in 0..p {
            let mut tp = c.theta.clone();
            let mut tm = c.theta.clone();
            tp[j] += h;
            tm[j] -= h;
            g_fd[j] = (empirical_risk(&ctx, &tp).unwrap() - empirical_risk(&ctx, &tm).unwrap())
                / (2.0 * h);
            let col = (gradient(&ctx, &tp).unwrap() - gradient(&ctx, &tm).unwrap()) / (2.0 * h);
            h_fd.set_column(j, &col);
        }
        let eg = rel(&g, &g_fd);
        let eh = (&hm - &h_fd).norm() / hm.norm();
        assert!(eg < 1e-6, "config {k}: gradient rel err {eg:e}");
        assert!(eh < 1e-5, "config {k}: hessian rel err {eh:e}");
        assert_eq!(hm, hm.transpose());

        // second difference of the risk along a direction matches vᵗHv
        let v = DVector::from_fn(p, |i, _| ((i * 7 + k) % 5) as f64 - 2.0);
        let v = &v / v.norm();
        let hh = 1e-4;
        let r0 = empirical_risk(&ctx, &c.theta).unwrap();
        let rp = empirical_risk(&ctx, &(&c.theta + &v * hh)).unwrap();
        let rm = empirical_risk(&ctx, &(&c.theta - &v * hh)).unwrap();
        let curv = (rp - 2.0 * r0 + rm) / (hh * hh);
        let hv = hessian_vec(&ctx, &hf.mu, &v).unwrap();
        let quad = v.dot(&hv);
        assert!(
            (curv - quad).abs() <= 1e-4 * quad.abs().max(1e-3),
            "config {k}: {curv} vs {quad}"
        );
        assert!(rel(&hv, &(&hm * &v)) < 1e-12);
    }
}

#[test]
fn linear_quadratic_curvature_is_unit() {
    let rep = check_regularity(
        &RidgeFunction::<f64>::linear(),
        &LossSpec::quadratic(),
        Interval::new(-3.0, 3.0),
        Interval::new(-3.0, 3.0),
        41,
    )
    .unwrap();
    assert!(rep.delta_hat <= 1.0);
    assert_eq!(rep.delta_hat, 1.0);
    assert_eq!(rep.c_fprime_hat, 1.0);
    assert_eq!(rep.c_lsecond_hat, 1.0);
}

#[test]
fn f32_gradient_tracks_f64() {
    let ridge = make_ridge_function::<f64>(LinkKind::TanhTilt, 0.5).unwrap();
    let c = case(ridge, 77);
    let ctx = RiskContext::new(&c.x, &c.y, ridge, LossSpec::quadratic()).unwrap();
    let g = gradient(&ctx, &c.theta).unwrap();

    let x32 = c.x.map(|v| v as f32);
    let y32 = c.y.map(|v| v as f32);
    let t32 = c.theta.map(|v| v as f32);
    let ridge32 = make_ridge_function::<f32>(LinkKind::TanhTilt, 0.5).unwrap();
    let ctx32 = RiskContext::new(&x32, &y32, ridge32, LossSpec::quadratic()).unwrap();
    let g32 = gradient(&ctx32, &t32).unwrap().map(|v| v as f64);
    assert!(rel(&g, &g32) < 1e-4);
}
