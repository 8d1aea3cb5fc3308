//! Empirical risk `R̂ₙ(θ) = (1/n) Σ ℓ(Yᵢ − f(Xᵢᵗθ))`, its gradient and its
//! Hessian in the factored form `(1/n)·XᵗD(μ)X`.
//!
//! Residuals are always `rᵢ = Yᵢ − f(Xᵢᵗθ)`.

use nalgebra::{DMatrix, DVector};

use crate::datagen::{sample_row, DesignKind, Dataset, NoiseKind};
use crate::error::{Error, Result};
use crate::model::{LossSpec, RidgeFunction};
use crate::rng::rng_from_seed;
use crate::scalar::{pairwise_sum, Real};

/// Largest `p` for which the Hessian is materialised densely.
pub const DENSE_HESSIAN_CAP: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct RiskContext<'a, T: Real> {
    pub x: &'a DMatrix<T>,
    pub y: &'a DVector<T>,
    pub ridge: RidgeFunction<T>,
    pub loss: LossSpec<T>,
}

impl<'a, T: Real> RiskContext<'a, T> {
    pub fn new(
        x: &'a DMatrix<T>,
        y: &'a DVector<T>,
        ridge: RidgeFunction<T>,
        loss: LossSpec<T>,
    ) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                what: "responses",
                expected: x.nrows(),
                found: y.len(),
            });
        }
        Ok(Self { x, y, ridge, loss })
    }

    /// Context on a dataset, using the dataset's own link.
    pub fn from_dataset(ds: &'a Dataset<T>, loss: LossSpec<T>) -> Self {
        Self {
            x: ds.x(),
            y: &ds.y,
            ridge: ds.ridge,
            loss,
        }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    fn check(&self, theta: &DVector<T>) -> Result<()> {
        if theta.len() != self.p() {
            return Err(Error::DimensionMismatch {
                what: "theta",
                expected: self.p(),
                found: theta.len(),
            });
        }
        Ok(())
    }

    /// Index values `Xᵢᵗθ`.
    pub fn index(&self, theta: &DVector<T>) -> Result<DVector<T>> {
        self.check(theta)?;
        Ok(self.x * theta)
    }

    pub fn residuals(&self, theta: &DVector<T>) -> Result<DVector<T>> {
        let z = self.index(theta)?;
        Ok(DVector::from_iterator(
            self.n(),
            z.iter().zip(self.y.iter()).map(|(&z, &y)| y - self.ridge.value(z)),
        ))
    }

    /// The vector `D(ν)ℓ′(r)` with `νᵢ = f′(Xᵢᵗθ)`.
    pub fn weighted_score(&self, theta: &DVector<T>) -> Result<DVector<T>> {
        let z = self.index(theta)?;
        Ok(DVector::from_iterator(
            self.n(),
            z.iter()
                .zip(self.y.iter())
                .map(|(&z, &y)| self.loss.d1(y - self.ridge.value(z)) * self.ridge.d1(z)),
        ))
    }
}

pub fn empirical_risk<T: Real>(ctx: &RiskContext<'_, T>, theta: &DVector<T>) -> Result<T> {
    let r = ctx.residuals(theta)?;
    let losses: Vec<T> = r.iter().map(|&v| ctx.loss.value(v)).collect();
    Ok(pairwise_sum(&losses) / T::from_usize_lossy(ctx.n()))
}

/// `∇R̂ₙ(θ) = −(1/n)·XᵗD(ν)ℓ′(r)`.
pub fn gradient<T: Real>(ctx: &RiskContext<'_, T>, theta: &DVector<T>) -> Result<DVector<T>> {
    let w = ctx.weighted_score(theta)?;
    Ok(ctx.x.tr_mul(&w) * (-T::one() / T::from_usize_lossy(ctx.n())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianFactors<T: Real> {
    /// `μᵢ = ℓ″(rᵢ)f′(zᵢ)² − ℓ′(rᵢ)f″(zᵢ)`
    pub mu: DVector<T>,
    /// `νᵢ = f′(zᵢ)`
    pub nu: DVector<T>,
    /// Dense `(1/n)XᵗD(μ)X`; `None` above [`DENSE_HESSIAN_CAP`].
    pub h: Option<DMatrix<T>>,
}

/// Diagonal weights `(μ, ν)` at `θ`.
pub fn hessian_weights<T: Real>(
    ctx: &RiskContext<'_, T>,
    theta: &DVector<T>,
) -> Result<(DVector<T>, DVector<T>)> {
    let z = ctx.index(theta)?;
    let n = ctx.n();
    let mut mu = DVector::zeros(n);
    let mut nu = DVector::zeros(n);
    for i in 0..n {
        let r = ctx.y[i] - ctx.ridge.value(z[i]);
        let fp = ctx.ridge.d1(z[i]);
        mu[i] = ctx.loss.d2(r) * fp * fp - ctx.loss.d1(r) * ctx.ridge.d2(z[i]);
        nu[i] = fp;
    }
    Ok((mu, nu))
}

pub fn hessian<T: Real>(ctx: &RiskContext<'_, T>, theta: &DVector<T>) -> Result<HessianFactors<T>> {
    let (mu, nu) = hessian_weights(ctx, theta)?;
    let p = ctx.p();
    let h = if p <= DENSE_HESSIAN_CAP {
        let inv_n = T::one() / T::from_usize_lossy(ctx.n());
        let mut scaled = ctx.x.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= mu[i];
        }
        let full = ctx.x.tr_mul(&scaled);
        // mirror the upper triangle so the result is exactly symmetric
        let mut h = DMatrix::zeros(p, p);
        for j in 0..p {
            for i in 0..=j {
                let v = full[(i, j)] * inv_n;
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        Some(h)
    } else {
        None
    };
    Ok(HessianFactors { mu, nu, h })
}

/// Matrix-free product `∇²R̂ₙ(θ)·v = (1/n)Xᵗ(μ ∘ Xv)`.
pub fn hessian_vec<T: Real>(
    ctx: &RiskContext<'_, T>,
    mu: &DVector<T>,
    v: &DVector<T>,
) -> Result<DVector<T>> {
    ctx.check(v)?;
    let xv = ctx.x * v;
    let w = xv.component_mul(mu);
    Ok(ctx.x.tr_mul(&w) / T::from_usize_lossy(ctx.n()))
}

/// Monte Carlo mean of a loss together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate<T> {
    pub mean: T,
    pub std_err: T,
    pub samples: usize,
}

/// Estimates `R(θ) = E[ℓ(Y − f(Xᵗθ))]` from `m` fresh draws of `(X, ε)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_theoretical_risk<T: Real>(
    ridge: &RidgeFunction<T>,
    loss: &LossSpec<T>,
    theta: &DVector<T>,
    theta_star: &DVector<T>,
    dist_kind: DesignKind,
    noise_kind: NoiseKind,
    m: usize,
    seed: u64,
) -> Result<RiskEstimate<T>> {
    if m == 0 {
        return Err(Error::Domain("need at least one Monte Carlo draw".into()));
    }
    if theta.len() != theta_star.len() {
        return Err(Error::DimensionMismatch {
            what: "theta",
            expected: theta_star.len(),
            found: theta.len(),
        });
    }
    let p = theta.len();
    let mut rng = rng_from_seed(seed);
    let mut row = vec![T::zero(); p];
    let mut losses = Vec::with_capacity(m);
    for _ in 0..m {
        sample_row(dist_kind, &mut rng, &mut row);
        let eps: T = noise_kind.sample(&mut rng);
        let mut z = T::zero();
        let mut z_star = T::zero();
        for j in 0..p {
            z += row[j] * theta[j];
            z_star += row[j] * theta_star[j];
        }
        let y = ridge.value(z_star) + eps;
        losses.push(loss.value(y - ridge.value(z)));
    }
    let mf = T::from_usize_lossy(m);
    let mean = pairwise_sum(&losses) / mf;
    let dev: Vec<T> = losses.iter().map(|&l| (l - mean) * (l - mean)).collect();
    let std_err = if m > 1 {
        (pairwise_sum(&dev) / T::from_usize_lossy(m - 1) / mf).sqrt()
    } else {
        T::zero()
    };
    Ok(RiskEstimate {
        mean,
        std_err,
        samples: m,
    })
}
