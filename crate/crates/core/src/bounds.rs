//! Closed-form error radii, success probabilities, extreme singular value
//! bounds, coupon-collector moments and covering numbers.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::solver::Regime;

/// Largest coupon count handled by exact inclusion–exclusion.
pub const MAX_EXACT_COUPONS: usize = 24;
/// Largest covering number for which binomial sums are evaluated.
pub const MAX_COVER_FOR_SUMS: u64 = 60;

/// Constants entering the radius and probability formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundParams<T> {
    /// Absolute constant `C`.
    pub c_abs: T,
    /// `C_{K_X}` in the singular value bounds.
    pub c_kx: T,
    /// `c_{K_X}` in the probability exponents.
    pub c_kx_small: T,
    pub k_x: T,
    pub k_eps: T,
    pub alpha: T,
    pub delta: T,
    pub c_lsecond: T,
    pub c_fprime: T,
}

impl<T: Real> Default for BoundParams<T> {
    fn default() -> Self {
        Self {
            c_abs: T::one(),
            c_kx: T::one(),
            c_kx_small: T::one(),
            k_x: T::one(),
            k_eps: T::one(),
            alpha: T::lit(0.5),
            delta: T::one(),
            c_lsecond: T::one(),
            c_fprime: T::one(),
        }
    }
}

impl<T: Real> BoundParams<T> {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("c_abs", self.c_abs),
            ("c_kx", self.c_kx),
            ("c_kx_small", self.c_kx_small),
            ("k_x", self.k_x),
            ("k_eps", self.k_eps),
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("c_lsecond", self.c_lsecond),
            ("c_fprime", self.c_fprime),
        ];
        for (name, v) in named {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.alpha < T::one()) {
            return Err(Error::Domain(format!("alpha must be < 1, got {}", self.alpha)));
        }
        Ok(())
    }

    /// `6√C·C_ℓ″·C_f′·K_ε/δ`.
    pub fn prefactor(&self) -> T {
        T::lit(6.0) * self.c_abs.sqrt() * self.c_lsecond * self.c_fprime * self.k_eps / self.delta
    }

    /// Sets `c_abs` so that [`prefactor`](Self::prefactor) equals `target`.
    pub fn with_prefactor(mut self, target: T) -> Self {
        let unit = T::lit(6.0) * self.c_lsecond * self.c_fprime * self.k_eps / self.delta;
        let root = target / unit;
        self.c_abs = root * root;
        self
    }
}

fn sqrt_usize<T: Real>(k: usize) -> T {
    T::from_usize_lossy(k).sqrt()
}

/// `(big, small)` dimensions for the regime: `(n, p)` under, `(p, n)` over.
fn regime_dims(regime: Regime, n: usize, p: usize) -> (usize, usize) {
    match regime {
        Regime::Under => (n, p),
        Regime::Over => (p, n),
    }
}

/// Standing assumption `C_{K_X}²·small < (1−α)²·big`.
pub fn regime_condition<T: Real>(regime: Regime, bp: &BoundParams<T>, n: usize, p: usize) -> Result<()> {
    let (big, small) = regime_dims(regime, n, p);
    let one_minus = T::one() - bp.alpha;
    let lhs = bp.c_kx * bp.c_kx * T::from_usize_lossy(small);
    let rhs = one_minus * one_minus * T::from_usize_lossy(big);
    if lhs < rhs {
        Ok(())
    } else {
        Err(Error::RegimeCondition {
            regime: regime.as_str(),
            lhs: lhs.as_f64(),
            rhs: rhs.as_f64(),
        })
    }
}

/// Error radius `prefactor·√small / ((1−α)√big − C_{K_X}√small)`.
pub fn radius<T: Real>(regime: Regime, bp: &BoundParams<T>, n: usize, p: usize) -> Result<T> {
    bp.validate()?;
    regime_condition(regime, bp, n, p)?;
    let (big, small) = regime_dims(regime, n, p);
    let denom = (T::one() - bp.alpha) * sqrt_usize::<T>(big) - bp.c_kx * sqrt_usize::<T>(small);
    Ok(bp.prefactor() * sqrt_usize::<T>(small) / denom)
}

/// `1 − 2exp(−c_{K_X}α²·big) − exp(−small/2)`; may be negative (vacuous).
///
/// Only the formula is evaluated; the regime condition is not checked.
pub fn success_probability<T: Real>(regime: Regime, bp: &BoundParams<T>, n: usize, p: usize) -> T {
    let (big, small) = regime_dims(regime, n, p);
    let two = T::lit(2.0);
    T::one()
        - two * (-bp.c_kx_small * bp.alpha * bp.alpha * T::from_usize_lossy(big)).exp()
        - (-T::from_usize_lossy(small) / two).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Bound on `s_min(X)` for `n ≥ p`.
    Rows,
    /// Bound on `s_min(Xᵗ)` for `p ≥ n`.
    Columns,
}

impl Orientation {
    pub fn for_regime(regime: Regime) -> Self {
        match regime {
            Regime::Under => Orientation::Rows,
            Regime::Over => Orientation::Columns,
        }
    }
}

/// Rows: `(1−α)√n − C_{K_X}√p`; columns: `(1−α)√p − C_{K_X}√n`.
/// A non-positive value means the bound is vacuous.
pub fn smin_bound<T: Real>(orientation: Orientation, alpha: T, c_kx: T, n: usize, p: usize) -> T {
    let (big, small) = match orientation {
        Orientation::Rows => (n, p),
        Orientation::Columns => (p, n),
    };
    (T::one() - alpha) * sqrt_usize::<T>(big) - c_kx * sqrt_usize::<T>(small)
}

/// `(s_min, s_max)` over the `min(n, p)` singular values.
pub fn extreme_singulars<T: Real>(x: &DMatrix<T>) -> Result<(T, T)> {
    if x.is_empty() || x.iter().all(|v| *v == T::zero()) {
        return Err(Error::Domain("singular values of a zero or empty matrix".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("singular values of a non-finite matrix".into()));
    }
    let a = faer::Mat::<f64>::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)].as_f64());
    let s = a
        .singular_values()
        .map_err(|e| Error::Factorization(format!("SVD did not converge: {e:?}")))?;
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    let max = s.iter().copied().fold(0.0, f64::max);
    Ok((T::lit(min), T::lit(max)))
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy)]
struct Compensated<T> {
    sum: T,
    c: T,
}

impl<T: Real> Compensated<T> {
    fn new() -> Self {
        Self {
            sum: T::zero(),
            c: T::zero(),
        }
    }

    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.c
    }
}

/// Exact moments of the number `N` of draws needed to collect all coupons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouponMoments<T> {
    /// `E[N] = Σ_S (−1)^{|S|−1} / P_S`.
    pub mean: T,
    /// `E[N²] = 2·Σ_S (−1)^{|S|−1} / P_S² − E[N]` for the discrete draw count.
    pub second_moment: T,
    /// `2·Σ_S (−1)^{|S|−1} / P_S²`: second moment of the completion time when
    /// coupons arrive as a unit-rate Poisson process.
    pub poissonized_second_moment: T,
}

impl<T: Real> CouponMoments<T> {
    pub fn variance(&self) -> T {
        self.second_moment - self.mean * self.mean
    }
}

fn check_probs<T: Real>(probs: &[T]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Domain("need at least one coupon".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(**p > T::zero()) || !p.is_finite()) {
        return Err(Error::Domain(format!("coupon probabilities must be positive, got {p}")));
    }
    let total: T = probs.iter().fold(T::zero(), |a, &b| a + b);
    if (total - T::one()).abs() > T::lit(1e-10).max(T::machine_eps() * T::lit(64.0)) {
        return Err(Error::Domain(format!("coupon probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Exact inclusion–exclusion over all `2^K − 1` non-empty coupon subsets.
pub fn coupon_moments<T: Real>(probs: &[T]) -> Result<CouponMoments<T>> {
    check_probs(probs)?;
    let k = probs.len();
    if k > MAX_EXACT_COUPONS {
        return Err(Error::SizeCap {
            requested: k,
            cap: MAX_EXACT_COUPONS,
        });
    }
    // subset sums as high-half + low-half table lookups
    let lo_bits = k / 2;
    let hi_bits = k - lo_bits;
    let subset_sums = |offset: usize, bits: usize| -> Vec<T> {
        let mut sums = vec![T::zero(); 1 << bits];
        for mask in 1usize..(1 << bits) {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = sums[mask & (mask - 1)] + probs[offset + low];
        }
        sums
    };
    let lo = subset_sums(0, lo_bits);
    let hi = subset_sums(lo_bits, hi_bits);
    let mut first = Compensated::new();
    let mut second = Compensated::new();
    for (h, &hs) in hi.iter().enumerate() {
        let hc = h.count_ones();
        for (l, &ls) in lo.iter().enumerate() {
            if h == 0 && l == 0 {
                continue;
            }
            let inv = T::one() / (hs + ls);
            let odd = (hc + l.count_ones()) % 2 == 1;
            let (a, b) = if odd { (inv, inv * inv) } else { (-inv, -(inv * inv)) };
            first.add(a);
            second.add(b);
        }
    }
    let mean = first.value();
    let poissonized = T::lit(2.0) * second.value();
    Ok(CouponMoments {
        mean,
        second_moment: poissonized - mean,
        poissonized_second_moment: poissonized,
    })
}

/// `(Σ_k C(K,k)/k, Σ_k C(K,k)/k²)` for `k = 1..=K`.
pub fn binomial_sums<T: Real>(count: u64) -> Result<(T, T)> {
    if count == 0 {
        return Err(Error::Domain("covering number must be at least 1".into()));
    }
    if count > MAX_COVER_FOR_SUMS {
        return Err(Error::Overflow(format!(
            "binomial sums for covering number {count} exceed the cap {MAX_COVER_FOR_SUMS}"
        )));
    }
    let mut s1 = Compensated::new();
    let mut s2 = Compensated::new();
    let mut binom: u128 = 1;
    for k in 1..=count {
        // C(K,k) = C(K,k−1)·(K−k+1)/k, exact in u128 for K ≤ 60
        binom = binom * u128::from(count - k + 1) / u128::from(k);
        let b = T::lit(binom as f64);
        let kk = T::lit(k as f64);
        s1.add(b / kk);
        s2.add(b / (kk * kk));
    }
    Ok((s1.value(), s2.value()))
}

/// Upper bounds `E[N] ≤ p_min⁻¹ΣC(K,k)/k` and `Var(N) ≤ 2p_min⁻²ΣC(K,k)/k²`.
pub fn coupon_bounds<T: Real>(probs: &[T]) -> Result<(T, T)> {
    check_probs(probs)?;
    let p_min = probs.iter().copied().fold(probs[0], |a, b| a.min(b));
    let (s1, s2) = binomial_sums::<T>(probs.len() as u64)?;
    Ok((s1 / p_min, T::lit(2.0) * s2 / (p_min * p_min)))
}

/// `p_min⁻¹·(ΣC(𝒩,k)/k + t·√(2ΣC(𝒩,k)/k²))`, the sample size at which every
/// covering ball is hit except with probability at most `1/t²`.
pub fn coupon_sample_threshold<T: Real>(n_cover: u64, p_min: T, t: T) -> Result<T> {
    if !(p_min > T::zero() && p_min <= T::one()) {
        return Err(Error::Domain(format!("p_min must lie in (0, 1], got {p_min}")));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be non-negative, got {t}")));
    }
    let (s1, s2) = binomial_sums::<T>(n_cover)?;
    Ok((s1 + t * (T::lit(2.0) * s2).sqrt()) / p_min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverReport<T: Real> {
    pub centers: Vec<DVector<T>>,
    /// Indices of the centres in the input.
    pub center_indices: Vec<usize>,
    pub n_cover: usize,
    /// Radius in units of `√p`.
    pub cover_eps: T,
    pub p_min_hat: T,
    /// Index into `centers` for every input point.
    pub assignments: Vec<usize>,
}

/// Greedy farthest-point net: start from the first point, then repeatedly
/// promote the point farthest from all centres until every point lies within
/// `radius·√p` of one. Each point is assigned to its nearest centre.
pub fn epsilon_cover<T: Real>(points: &[DVector<T>], radius: T) -> Result<CoverReport<T>> {
    if points.is_empty() {
        return Err(Error::Domain("cannot cover an empty point set".into()));
    }
    if !(radius > T::zero()) {
        return Err(Error::Domain(format!("cover radius must be positive, got {radius}")));
    }
    let p = points[0].len();
    if let Some(bad) = points.iter().find(|v| v.len() != p) {
        return Err(Error::DimensionMismatch {
            what: "cover point",
            expected: p,
            found: bad.len(),
        });
    }
    let reach = radius * sqrt_usize::<T>(p);
    let mut center_indices = vec![0usize];
    let mut nearest = vec![0usize; points.len()];
    let mut dist: Vec<T> = points.iter().map(|v| (v - &points[0]).norm()).collect();
    loop {
        // farthest point; ties go to the lowest index
        let (far, far_d) = dist
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, bd), (i, &d)| if d > bd { (i, d) } else { (bi, bd) });
        if far_d <= reach {
            break;
        }
        let c = center_indices.len();
        center_indices.push(far);
        for (i, v) in points.iter().enumerate() {
            let d = (v - &points[far]).norm();
            if d < dist[i] {
                dist[i] = d;
                nearest[i] = c;
            }
        }
    }
    let n_cover = center_indices.len();
    let mut counts = vec![0usize; n_cover];
    for &a in &nearest {
        counts[a] += 1;
    }
    let total = T::from_usize_lossy(points.len());
    let min_count = counts.iter().copied().min().unwrap_or(0);
    Ok(CoverReport {
        centers: center_indices.iter().map(|&i| points[i].clone()).collect(),
        center_indices,
        n_cover,
        cover_eps: radius,
        p_min_hat: T::from_usize_lossy(min_count) / total,
        assignments: nearest,
    })
}

/// `(1+4ε)·r_over + 4ε‖θ*‖₂`.
pub fn generalization_bound<T: Real>(
    bp: &BoundParams<T>,
    n: usize,
    p: usize,
    cover_eps: T,
    theta_star_norm: T,
) -> Result<T> {
    if !(cover_eps >= T::zero()) || !(theta_star_norm >= T::zero()) {
        return Err(Error::Domain("cover_eps and theta_star_norm must be non-negative".into()));
    }
    let r = radius(Regime::Over, bp, n, p)?;
    let four_eps = T::lit(4.0) * cover_eps;
    Ok((T::one() + four_eps) * r + four_eps * theta_star_norm)
}

/// One line of a bound table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub regime: Regime,
    pub n: usize,
    pub p: usize,
    /// `NaN` when the regime condition fails.
    pub r: f64,
    pub prob: f64,
    pub smin_bound: f64,
}

impl BoundRow {
    pub fn evaluate<T: Real>(regime: Regime, bp: &BoundParams<T>, n: usize, p: usize) -> Self {
        Self {
            regime,
            n,
            p,
            r: radius(regime, bp, n, p).map(|r| r.as_f64()).unwrap_or(f64::NAN),
            prob: success_probability(regime, bp, n, p).as_f64(),
            smin_bound: smin_bound(Orientation::for_regime(regime), bp.alpha, bp.c_kx, n, p).as_f64(),
        }
    }
}

/// CSV with header `regime,n,p,r,prob,smin_bound`.
pub fn write_bound_csv<W: Write>(mut w: W, rows: &[BoundRow]) -> Result<()> {
    writeln!(w, "regime,n,p,r,prob,smin_bound")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.regime.as_str(),
            row.n,
            row.p,
            row.r,
            row.prob,
            row.smin_bound
        )?;
    }
    Ok(())
}
