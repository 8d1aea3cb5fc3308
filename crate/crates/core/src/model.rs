//! Ridge links `f` and losses `ℓ`, with their first two derivatives and the
//! regularity constants the error radii depend on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    #[default]
    Linear,
    /// `f(z) = z + a·tanh(z)`
    TanhTilt,
    /// `f(z) = z + a·z/√(1+z²)`
    ScaledSoftsign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `ℓ(z) = z²/2`
    #[default]
    Quadratic,
    /// `ℓ(z) = c²(√(1+(z/c)²) − 1)`
    PseudoHuber,
}

/// Increasing link function with bounded derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeFunction<T> {
    kind: LinkKind,
    param: T,
    c_fprime: T,
}

impl<T: Real> RidgeFunction<T> {
    pub fn linear() -> Self {
        Self {
            kind: LinkKind::Linear,
            param: T::zero(),
            c_fprime: T::one(),
        }
    }

    pub fn kind(&self) -> LinkKind {
        self.kind
    }

    pub fn param(&self) -> T {
        self.param
    }

    /// Supremum of `f′` over the real line.
    pub fn c_fprime(&self) -> T {
        self.c_fprime
    }

    pub fn value(&self, z: T) -> T {
        match self.kind {
            LinkKind::Linear => z,
            LinkKind::TanhTilt => z + self.param * z.tanh(),
            LinkKind::ScaledSoftsign => z + self.param * z / (T::one() + z * z).sqrt(),
        }
    }

    pub fn d1(&self, z: T) -> T {
        match self.kind {
            LinkKind::Linear => T::one(),
            LinkKind::TanhTilt => {
                let t = z.tanh();
                T::one() + self.param * (T::one() - t * t)
            }
            LinkKind::ScaledSoftsign => {
                let s = T::one() + z * z;
                T::one() + self.param / (s * s.sqrt())
            }
        }
    }

    pub fn d2(&self, z: T) -> T {
        match self.kind {
            LinkKind::Linear => T::zero(),
            LinkKind::TanhTilt => {
                let t = z.tanh();
                -(T::lit(2.0) * self.param) * t * (T::one() - t * t)
            }
            LinkKind::ScaledSoftsign => {
                let s = T::one() + z * z;
                -(T::lit(3.0) * self.param) * z / (s * s * s.sqrt())
            }
        }
    }
}

/// Builds a link of the given kind. `param` is ignored for `Linear` and must
/// lie in `[0, 1)` otherwise.
pub fn make_ridge_function<T: Real>(kind: LinkKind, param: T) -> Result<RidgeFunction<T>> {
    match kind {
        LinkKind::Linear => Ok(RidgeFunction::linear()),
        LinkKind::TanhTilt | LinkKind::ScaledSoftsign => {
            if !(param >= T::zero() && param < T::one()) {
                return Err(Error::Domain(format!(
                    "{kind:?} parameter must lie in [0, 1), got {param}"
                )));
            }
            // both links attain sup f′ = 1 + a at z = 0
            Ok(RidgeFunction {
                kind,
                param,
                c_fprime: T::one() + param,
            })
        }
    }
}

/// Loss with `ℓ′(0) = 0` and `0 < ℓ″ ≤ c_lsecond`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec<T> {
    kind: LossKind,
    param: T,
    c_lsecond: T,
}

impl<T: Real> LossSpec<T> {
    pub fn quadratic() -> Self {
        Self {
            kind: LossKind::Quadratic,
            param: T::zero(),
            c_lsecond: T::one(),
        }
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn param(&self) -> T {
        self.param
    }

    pub fn c_lsecond(&self) -> T {
        self.c_lsecond
    }

    pub fn value(&self, z: T) -> T {
        match self.kind {
            LossKind::Quadratic => z * z / T::lit(2.0),
            LossKind::PseudoHuber => {
                let c = self.param;
                let u = z / c;
                // c²·u²/(√(1+u²)+1) avoids cancellation near zero
                c * c * u * u / ((T::one() + u * u).sqrt() + T::one())
            }
        }
    }

    pub fn d1(&self, z: T) -> T {
        match self.kind {
            LossKind::Quadratic => z,
            LossKind::PseudoHuber => {
                let u = z / self.param;
                z / (T::one() + u * u).sqrt()
            }
        }
    }

    pub fn d2(&self, z: T) -> T {
        match self.kind {
            LossKind::Quadratic => T::one(),
            LossKind::PseudoHuber => {
                let u = z / self.param;
                let s = T::one() + u * u;
                T::one() / (s * s.sqrt())
            }
        }
    }
}

/// Builds a loss. `param` is the pseudo-Huber transition scale and must be
/// strictly positive; it is ignored for the quadratic loss.
pub fn make_loss<T: Real>(kind: LossKind, param: T) -> Result<LossSpec<T>> {
    match kind {
        LossKind::Quadratic => Ok(LossSpec::quadratic()),
        LossKind::PseudoHuber => {
            if !(param > T::zero()) || !param.is_finite() {
                return Err(Error::Domain(format!(
                    "pseudo_huber scale must be positive, got {param}"
                )));
            }
            Ok(LossSpec {
                kind,
                param,
                c_lsecond: T::one(),
            })
        }
    }
}

/// Closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    /// `count` equispaced points including both endpoints.
    pub fn grid(&self, count: usize) -> Vec<T> {
        let last = T::from_usize_lossy(count - 1);
        (0..count)
            .map(|i| {
                if i + 1 == count {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * T::from_usize_lossy(i) / last
                }
            })
            .collect()
    }
}

/// Grid estimates of the constants entering the error radii.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport<T> {
    pub c_fprime_hat: T,
    pub c_lsecond_hat: T,
    /// Minimum of `|ℓ″(w)f′(z)² − ℓ′(w)f″(z)|` over the grid.
    pub delta_hat: T,
    pub grid_size: usize,
    pub z_range: Interval<T>,
    pub w_range: Interval<T>,
}

/// Evaluates the curvature weight on a `grid × grid` lattice over
/// `z_range × w_range`.
pub fn check_regularity<T: Real>(
    f: &RidgeFunction<T>,
    loss: &LossSpec<T>,
    z_range: Interval<T>,
    w_range: Interval<T>,
    grid: usize,
) -> Result<RegularityReport<T>> {
    if grid < 2 {
        return Err(Error::Domain(format!("grid must be at least 2, got {grid}")));
    }
    if !(z_range.lo <= z_range.hi) || !(w_range.lo <= w_range.hi) {
        return Err(Error::Domain("empty range".into()));
    }
    let zs = z_range.grid(grid);
    let ws = w_range.grid(grid);
    let mut c_fprime_hat = T::zero();
    let mut c_lsecond_hat = T::zero();
    let mut delta_hat: Option<T> = None;
    for &w in &ws {
        c_lsecond_hat = c_lsecond_hat.max(loss.d2(w));
    }
    for &z in &zs {
        let fp = f.d1(z);
        let fpp = f.d2(z);
        c_fprime_hat = c_fprime_hat.max(fp);
        for &w in &ws {
            let mu = (loss.d2(w) * fp * fp - loss.d1(w) * fpp).abs();
            delta_hat = Some(match delta_hat {
                Some(d) => d.min(mu),
                None => mu,
            });
        }
    }
    Ok(RegularityReport {
        c_fprime_hat,
        c_lsecond_hat,
        delta_hat: delta_hat.unwrap_or_else(T::zero),
        grid_size: grid,
        z_range,
        w_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_links() -> Vec<RidgeFunction<f64>> {
        vec![
            make_ridge_function(LinkKind::Linear, 0.0).unwrap(),
            make_ridge_function(LinkKind::TanhTilt, 0.5).unwrap(),
            make_ridge_function(LinkKind::TanhTilt, 0.9).unwrap(),
            make_ridge_function(LinkKind::ScaledSoftsign, 0.5).unwrap(),
        ]
    }

    fn all_losses() -> Vec<LossSpec<f64>> {
        vec![
            make_loss(LossKind::Quadratic, 0.0).unwrap(),
            make_loss(LossKind::PseudoHuber, 1.0).unwrap(),
            make_loss(LossKind::PseudoHuber, 0.3).unwrap(),
        ]
    }

    fn fd_ok(exact: f64, plus: f64, minus: f64, h: f64) -> bool {
        let fd = (plus - minus) / (2.0 * h);
        (exact - fd).abs() <= 1e-6 * (1.0 + exact.abs())
    }

    #[test]
    fn linear_link_values() {
        let f = make_ridge_function(LinkKind::Linear, 0.0).unwrap();
        assert_eq!((f.value(3.0), f.d1(3.0), f.d2(3.0)), (3.0, 1.0, 0.0));
    }

    #[test]
    fn tanh_tilt_at_origin() {
        let f = make_ridge_function(LinkKind::TanhTilt, 0.5).unwrap();
        assert_eq!(f.value(0.0), 0.0);
        assert_eq!(f.d1(0.0), 1.5);
        assert_eq!(f.d2(0.0), 0.0);
        assert_eq!(f.c_fprime(), 1.5);
    }

    #[test]
    fn tanh_tilt_zero_is_identity() {
        let f = make_ridge_function(LinkKind::TanhTilt, 0.0).unwrap();
        let g = RidgeFunction::<f64>::linear();
        for z in Interval::new(-5.0, 5.0).grid(101) {
            assert_eq!(f.value(z), g.value(z));
            assert_eq!(f.d1(z), g.d1(z));
            assert_eq!(f.d2(z).abs(), 0.0);
        }
    }

    #[test]
    fn link_parameter_domain() {
        for bad in [-0.1, 1.0, 2.0, f64::NAN] {
            assert!(matches!(
                make_ridge_function(LinkKind::TanhTilt, bad),
                Err(Error::Domain(_))
            ));
            assert!(make_ridge_function(LinkKind::ScaledSoftsign, bad).is_err());
        }
        assert!(make_ridge_function(LinkKind::Linear, 7.0).is_ok());
    }

    #[test]
    fn quadratic_loss_values() {
        let l = make_loss(LossKind::Quadratic, 0.0).unwrap();
        assert_eq!((l.value(2.0), l.d1(2.0), l.d2(2.0)), (2.0, 2.0, 1.0));
        assert_eq!(l.d1(0.0), 0.0);
        assert_eq!(l.c_lsecond(), 1.0);
    }

    #[test]
    fn pseudo_huber_at_origin() {
        let l = make_loss(LossKind::PseudoHuber, 1.0).unwrap();
        assert_eq!(l.d1(0.0), 0.0);
        assert_eq!(l.d2(0.0), 1.0);
        assert_eq!(l.value(0.0), 0.0);
        // √(1+z²) − 1 at z = 3
        assert!((l.value(3.0) - (10f64.sqrt() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn pseudo_huber_rejects_nonpositive_scale() {
        assert!(make_loss(LossKind::PseudoHuber, 0.0).is_err());
        assert!(make_loss(LossKind::PseudoHuber, -1.0).is_err());
    }

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-5;
        let zs = Interval::new(-3.0, 3.0).grid(100);
        for f in all_links() {
            for &z in &zs {
                assert!(fd_ok(f.d1(z), f.value(z + h), f.value(z - h), h), "{f:?} f' at {z}");
                assert!(fd_ok(f.d2(z), f.d1(z + h), f.d1(z - h), h), "{f:?} f'' at {z}");
            }
        }
        for l in all_losses() {
            for &z in &zs {
                assert!(fd_ok(l.d1(z), l.value(z + h), l.value(z - h), h), "{l:?} l' at {z}");
                assert!(fd_ok(l.d2(z), l.d1(z + h), l.d1(z - h), h), "{l:?} l'' at {z}");
            }
        }
    }

    #[test]
    fn links_increasing_with_bounded_slope() {
        let zs = Interval::new(-10.0, 10.0).grid(100);
        for f in all_links() {
            for w in zs.windows(2) {
                assert!(f.value(w[0]) < f.value(w[1]));
            }
            for &z in &zs {
                assert!(f.d1(z) > 0.0 && f.d1(z) <= f.c_fprime());
            }
        }
    }

    #[test]
    fn losses_have_bounded_positive_curvature() {
        for l in all_losses() {
            assert_eq!(l.d1(0.0), 0.0);
            for z in Interval::new(-10.0, 10.0).grid(100) {
                assert!(l.d2(z) > 0.0 && l.d2(z) <= l.c_lsecond());
            }
        }
    }

    #[test]
    fn regularity_linear_quadratic() {
        let r = check_regularity(
            &RidgeFunction::<f64>::linear(),
            &LossSpec::quadratic(),
            Interval::new(-4.0, 7.0),
            Interval::new(-2.0, 2.0),
            11,
        )
        .unwrap();
        assert_eq!(r.delta_hat, 1.0);
        assert_eq!(r.c_fprime_hat, 1.0);
        assert_eq!(r.c_lsecond_hat, 1.0);
    }

    #[test]
    fn regularity_tanh_tilt_grid_minimum() {
        // Brute force over a 100001 × 101 lattice and a 30-digit evaluation both
        // put the minimum at the corner z = ±1, w = ∓1:
        // (1 + sech²(1)/2)² − sech²(1)·tanh(1) = 1.14421894929294748657
        let f = make_ridge_function(LinkKind::TanhTilt, 0.5f64).unwrap();
        let r = check_regularity(
            &f,
            &LossSpec::quadratic(),
            Interval::new(-1.0, 1.0),
            Interval::new(-1.0, 1.0),
            101,
        )
        .unwrap();
        assert!((r.delta_hat - 1.144_218_949_292_947_5).abs() < 1e-12);
        assert_eq!(r.c_fprime_hat, 1.5);
    }

    #[test]
    fn regularity_rejects_tiny_grid() {
        let f = RidgeFunction::<f64>::linear();
        let l = LossSpec::quadratic();
        let iv = Interval::new(0.0, 1.0);
        assert!(check_regularity(&f, &l, iv, iv, 1).is_err());
        assert!(check_regularity(&f, &l, Interval::new(1.0, 0.0), iv, 5).is_err());
    }

    #[test]
    fn single_precision_instantiation() {
        let f = make_ridge_function(LinkKind::TanhTilt, 0.5f32).unwrap();
        assert_eq!(f.d1(0.0f32), 1.5f32);
    }
}
