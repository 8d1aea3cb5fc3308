//! Small order statistics and regressions used by the summaries.

/// Linear-interpolation quantile of the finite entries (`q ∈ [0, 1]`); NaN
/// when there are none.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Least-squares line `y = a + b·x`; returns `(a, b)`.
pub fn ols_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols_line(&lx, &ly).1
}

/// Fit of `y = β·x` without intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginFit {
    pub slope: f64,
    pub std_err: f64,
    /// Uncentred `R² = 1 − SSE/Σy²`.
    pub r2: f64,
    pub samples: usize,
}

impl OriginFit {
    /// Normal-approximation interval `β ± z·se`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.slope - z * self.std_err, self.slope + z * self.std_err)
    }
}

pub fn fit_through_origin(x: &[f64], y: &[f64]) -> OriginFit {
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let slope = sxy / sxx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let m = x.len();
    let std_err = if m > 1 {
        (sse / (m - 1) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { f64::NAN };
    OriginFit {
        slope,
        std_err,
        r2,
        samples: m,
    }
}

/// Three-sigma binomial slack `3√(q(1−q)/trials)`.
pub fn three_sigma(q: f64, trials: usize) -> f64 {
    3.0 * (q * (1.0 - q) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(median(&[f64::NAN, 5.0]), 5.0);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn exact_lines_are_recovered() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.sqrt()).collect();
        assert!((log_log_slope(&x, &y) - 0.5).abs() < 1e-12);
        let fit = fit_through_origin(&x, &x.map(|v| 2.0 * v));
        assert!((fit.slope - 2.0).abs() < 1e-15);
        assert_eq!(fit.std_err, 0.0);
        assert_eq!(fit.r2, 1.0);
    }
}
