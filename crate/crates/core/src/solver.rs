//! Stationary points of the empirical risk.
//!
//! Both regimes integrate the damped Newton flow `θ ← θ + h·d(θ)`, where
//! `d` solves `∇²R̂ₙ(θ)d = −∇R̂ₙ(θ)`. With `X = UΣVᵗ` (compact SVD):
//!
//! * underparametrised: `d = VΣ⁻¹(UᵗD(μ)U)⁻¹UᵗD(ν)ℓ′(r)`, the exact Newton step;
//! * overparametrised: `d = VΣ⁻¹UᵗD(μ)⁻¹D(ν)ℓ′(r)`, the least-norm solution of
//!   the interpolation system `D(μ)Xd = D(ν)ℓ′(r)`, which lies in the row
//!   space of `X`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinkKind, LossKind};
use crate::risk::{gradient, hessian_weights, RiskContext};
use crate::scalar::Real;

/// Relative cutoff below which singular values do not count toward the rank.
pub const RANK_CUTOFF: f64 = 1e-12;
/// Relative floor on `|μᵢ|`; below it the curvature assumption is violated.
pub const MU_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Under,
    Over,
}

impl Regime {
    /// `Under` when `p < n`, `Over` otherwise.
    pub fn for_dims(n: usize, p: usize) -> Self {
        if p < n {
            Regime::Under
        } else {
            Regime::Over
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Under => "under",
            Regime::Over => "over",
        }
    }
}

/// Compact SVD `X = UΣVᵗ` with singular values sorted in descending order.
#[derive(Debug, Clone)]
pub struct SvdFactors<T: Real> {
    pub u: DMatrix<T>,
    pub sigma: DVector<T>,
    pub v: DMatrix<T>,
    /// Number of singular values above `RANK_CUTOFF·σ₁`.
    pub rank: usize,
}

impl<T: Real> SvdFactors<T> {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    pub fn s_max(&self) -> T {
        self.sigma[0]
    }

    pub fn s_min(&self) -> T {
        self.sigma[self.k() - 1]
    }

    /// `UΣVᵗ`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= self.sigma[j];
        }
        us * self.v.transpose()
    }
}

pub fn svd_factors<T: Real>(x: &DMatrix<T>) -> Result<SvdFactors<T>> {
    if x.is_empty() || x.iter().all(|v| *v == T::zero()) {
        return Err(Error::Domain("SVD of a zero or empty matrix".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("SVD input contains non-finite entries".into()));
    }
    // factored in f64 by faer, whatever the working precision
    let a = faer::Mat::<f64>::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)].as_f64());
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Factorization(format!("SVD did not converge: {e:?}")))?;
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = fs.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| fs[b].total_cmp(&fs[a]));
    let sigma = DVector::from_iterator(k, order.iter().map(|&i| T::lit(fs[i])));
    let u = DMatrix::from_fn(x.nrows(), k, |i, j| T::lit(fu[(i, order[j])]));
    let v = DMatrix::from_fn(x.ncols(), k, |i, j| T::lit(fv[(i, order[j])]));
    let cutoff = T::lit(RANK_CUTOFF) * sigma[0];
    let rank = sigma.iter().filter(|&&s| s > cutoff).count();
    let out = SvdFactors { u, sigma, v, rank };
    let err = (out.reconstruct() - x).norm();
    if !(err <= T::machine_eps().sqrt() * x.norm()) {
        return Err(Error::Factorization(format!(
            "SVD reconstruction error {err} too large"
        )));
    }
    Ok(out)
}

fn check_mu<T: Real>(mu: &DVector<T>) -> Result<()> {
    let max = mu.amax();
    if !(max > T::zero()) || !max.is_finite() {
        return Err(Error::Singular(format!(
            "all Hessian weights vanish or are non-finite (max |mu| = {max})"
        )));
    }
    let floor = T::lit(MU_FLOOR) * max;
    if let Some((i, m)) = mu.iter().enumerate().find(|(_, m)| m.abs() < floor) {
        return Err(Error::Singular(format!(
            "Hessian weight mu[{i}] = {m} is below {floor} (curvature lower bound violated)"
        )));
    }
    Ok(())
}

/// Newton direction at `θ` for the given regime.
pub fn neuberger_direction<T: Real>(
    ctx: &RiskContext<'_, T>,
    theta: &DVector<T>,
    svd: &SvdFactors<T>,
    regime: Regime,
) -> Result<DVector<T>> {
    if svd.u.nrows() != ctx.n() || svd.v.nrows() != ctx.p() {
        return Err(Error::DimensionMismatch {
            what: "svd factors",
            expected: ctx.n(),
            found: svd.u.nrows(),
        });
    }
    let (mu, _) = hessian_weights(ctx, theta)?;
    let score = ctx.weighted_score(theta)?;
    check_mu(&mu)?;
    let r = svd.rank;
    let ur = svd.u.columns(0, r);
    let vr = svd.v.columns(0, r);
    let coeffs = match regime {
        Regime::Under => {
            let mut dmu_u = ur.clone_owned();
            for (i, mut row) in dmu_u.row_iter_mut().enumerate() {
                row *= mu[i];
            }
            let w = ur.tr_mul(&dmu_u);
            let rhs = ur.tr_mul(&score);
            let z = w.lu().solve(&rhs).ok_or_else(|| {
                Error::Singular("UᵗD(μ)U is singular; Newton system has no unique solution".into())
            })?;
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Singular("UᵗD(μ)U is numerically singular".into()));
            }
            z
        }
        Regime::Over => {
            let t = score.component_div(&mu);
            ur.tr_mul(&t)
        }
    };
    let scaled = DVector::from_iterator(r, (0..r).map(|j| coeffs[j] / svd.sigma[j]));
    Ok(vr * scaled)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions<T> {
    /// Damping in `(0, 1]`.
    pub step: T,
    pub max_iter: usize,
    /// Gradient-norm tolerance; `None` means `1e-10·(1 + ‖Y‖∞)`.
    pub tol: Option<T>,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            step: T::lit(0.5),
            max_iter: 200,
            tol: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub grad_norm: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone)]
pub struct StationaryPoint<T: Real> {
    pub theta_hat: DVector<T>,
    pub grad_norm: T,
    pub iterations: usize,
    pub regime: Regime,
    pub converged: bool,
    pub tol: T,
    pub trace: Vec<TraceRow>,
    /// Iterations at which the gradient norm increased.
    pub grad_increases: usize,
}

impl<T: Real> StationaryPoint<T> {
    /// Trace as CSV with header `iteration,grad_norm,step_norm`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,grad_norm,step_norm")?;
        for row in &self.trace {
            writeln!(w, "{},{:e},{:e}", row.iteration, row.grad_norm, row.step_norm)?;
        }
        Ok(())
    }
}

pub fn newton_flow<T: Real>(
    ctx: &RiskContext<'_, T>,
    theta_init: &DVector<T>,
    opts: &NewtonOptions<T>,
    regime: Regime,
) -> Result<StationaryPoint<T>> {
    let svd = svd_factors(ctx.x)?;
    newton_flow_with_svd(ctx, theta_init, opts, regime, &svd)
}

/// [`newton_flow`] with a precomputed SVD of `ctx.x`.
pub fn newton_flow_with_svd<T: Real>(
    ctx: &RiskContext<'_, T>,
    theta_init: &DVector<T>,
    opts: &NewtonOptions<T>,
    regime: Regime,
    svd: &SvdFactors<T>,
) -> Result<StationaryPoint<T>> {
    if theta_init.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("initial point is not finite".into()));
    }
    if !(opts.step > T::zero() && opts.step <= T::one()) {
        return Err(Error::Domain(format!("step must lie in (0, 1], got {}", opts.step)));
    }
    let tol = opts
        .tol
        .unwrap_or_else(|| T::lit(1e-10) * (T::one() + ctx.y.amax()));
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut theta = theta_init.clone();
    let mut trace = Vec::new();
    let mut grad_increases = 0;
    let mut prev: Option<T> = None;
    let mut iter = 0;
    loop {
        let gn = gradient(ctx, &theta)?.norm();
        if let Some(pg) = prev {
            if gn > pg {
                grad_increases += 1;
            }
        }
        prev = Some(gn);
        if gn <= tol || iter >= opts.max_iter {
            trace.push(TraceRow {
                iteration: iter,
                grad_norm: gn.as_f64(),
                step_norm: 0.0,
            });
            return Ok(StationaryPoint {
                theta_hat: theta,
                grad_norm: gn,
                iterations: iter,
                regime,
                converged: gn <= tol,
                tol,
                trace,
                grad_increases,
            });
        }
        let d = neuberger_direction(ctx, &theta, svd, regime)? * opts.step;
        trace.push(TraceRow {
            iteration: iter,
            grad_norm: gn.as_f64(),
            step_norm: d.norm().as_f64(),
        });
        theta += d;
        iter += 1;
    }
}

/// Orthogonal projection of `θ̂` onto the row space of `X`: the minimum-norm
/// `θ` with `Xθ = Xθ̂`.
pub fn min_norm_projection<T: Real>(x: &DMatrix<T>, theta_hat: &DVector<T>) -> Result<DVector<T>> {
    if theta_hat.len() != x.ncols() {
        return Err(Error::DimensionMismatch {
            what: "theta",
            expected: x.ncols(),
            found: theta_hat.len(),
        });
    }
    if x.iter().all(|v| *v == T::zero()) {
        return Ok(DVector::zeros(x.ncols()));
    }
    let svd = svd_factors(x)?;
    Ok(project_rowspace(&svd, theta_hat))
}

/// `V_r V_rᵗ θ` using the effective-rank columns of `V`.
pub fn project_rowspace<T: Real>(svd: &SvdFactors<T>, theta: &DVector<T>) -> DVector<T> {
    let vr = svd.v.columns(0, svd.rank);
    vr * vr.tr_mul(theta)
}

/// Least-squares solution for the linear link and quadratic loss:
/// `(XᵗX)⁻¹XᵗY` when `n > p`, `Xᵗ(XXᵗ)⁻¹Y` otherwise. Solved through
/// Cholesky factorisations of the Gram matrices, independently of the SVD.
pub fn closed_form_linear<T: Real>(ctx: &RiskContext<'_, T>) -> Result<DVector<T>> {
    if ctx.ridge.kind() != LinkKind::Linear || ctx.loss.kind() != LossKind::Quadratic {
        return Err(Error::Unsupported(format!(
            "closed form needs a linear link and quadratic loss, got {:?}/{:?}",
            ctx.ridge.kind(),
            ctx.loss.kind()
        )));
    }
    let x = ctx.x;
    if ctx.n() > ctx.p() {
        let gram = x.tr_mul(x);
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Singular("XᵗX is not positive definite".into()))?;
        Ok(chol.solve(&x.tr_mul(ctx.y)))
    } else {
        let gram = x * x.transpose();
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Singular("XXᵗ is not positive definite".into()))?;
        Ok(x.tr_mul(&chol.solve(ctx.y)))
    }
}
