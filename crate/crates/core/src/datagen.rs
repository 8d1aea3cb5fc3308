//! Synthetic data for the ridge model `Yᵢ = f(Xᵢᵗθ*) + εᵢ`.
//!
//! Design rows are isotropic with Euclidean norm exactly `√p`; noise is
//! centred and sub-Gaussian.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{make_ridge_function, LinkKind, RidgeFunction};
use crate::rng::{rng_from_seed, LabRng};
use crate::scalar::Real;

/// Upper bound on `n·p` for a sampled design.
pub const MAX_DESIGN_ENTRIES: usize = 1 << 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// Independent ±1 entries.
    #[default]
    Rademacher,
    /// Uniform on the sphere of radius `√p`.
    SphereUniform,
}

impl DesignKind {
    /// Sub-Gaussian proxy `K_X` recorded for the row distribution.
    pub fn k_x(self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    #[default]
    Gaussian,
    BoundedUniform,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian { sigma: f64 },
    /// Uniform on `[−b, b]`.
    BoundedUniform { b: f64 },
    Zero,
}

impl NoiseKind {
    pub fn from_parts(family: NoiseFamily, scale: f64) -> Result<Self> {
        if family != NoiseFamily::Zero && !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("noise scale must be >= 0, got {scale}")));
        }
        Ok(match family {
            NoiseFamily::Gaussian => NoiseKind::Gaussian { sigma: scale },
            NoiseFamily::BoundedUniform => NoiseKind::BoundedUniform { b: scale },
            NoiseFamily::Zero => NoiseKind::Zero,
        })
    }

    /// Sub-Gaussian proxy `K_ε` used by the bound formulas.
    pub fn k_eps(&self) -> f64 {
        match *self {
            NoiseKind::Gaussian { sigma } => sigma,
            NoiseKind::BoundedUniform { b } => b,
            NoiseKind::Zero => 0.0,
        }
    }

    /// Variance of one noise draw.
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseKind::Gaussian { sigma } => sigma * sigma,
            NoiseKind::BoundedUniform { b } => b * b / 3.0,
            NoiseKind::Zero => 0.0,
        }
    }

    pub fn sample<T: Real>(&self, rng: &mut LabRng) -> T {
        match *self {
            NoiseKind::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                T::lit(sigma * z)
            }
            NoiseKind::BoundedUniform { b } => T::lit(b * rng.random_range(-1.0..=1.0)),
            NoiseKind::Zero => T::zero(),
        }
    }
}

/// Draws one design row of norm `√p` into `row`.
pub fn sample_row<T: Real>(kind: DesignKind, rng: &mut LabRng, row: &mut [T]) {
    match kind {
        DesignKind::Rademacher => {
            for v in row.iter_mut() {
                *v = if rng.random::<bool>() { T::one() } else { -T::one() };
            }
        }
        DesignKind::SphereUniform => {
            let p = row.len();
            loop {
                let g: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    let scale = (p as f64).sqrt() / norm;
                    for (v, x) in row.iter_mut().zip(g) {
                        *v = T::lit(x * scale);
                    }
                    return;
                }
            }
        }
    }
}

/// `n × p` design matrix; row `i` is observation `Xᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design<T: Real> {
    pub x: DMatrix<T>,
    pub kind: DesignKind,
    pub seed: u64,
}

impl<T: Real> Design<T> {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Numerical rank (singular values above `1e-12·σ₁`).
    pub fn rank(&self) -> Result<usize> {
        if self.x.iter().all(|v| *v == T::zero()) {
            return Ok(0);
        }
        Ok(crate::solver::svd_factors(&self.x)?.rank)
    }

    /// `(1/n)·Σ XᵢXᵢᵗ`.
    pub fn second_moment(&self) -> DMatrix<T> {
        self.x.tr_mul(&self.x) / T::from_usize_lossy(self.n())
    }
}

pub fn sample_design<T: Real>(n: usize, p: usize, kind: DesignKind, seed: u64) -> Result<Design<T>> {
    sample_design_capped(n, p, kind, seed, MAX_DESIGN_ENTRIES)
}

pub fn sample_design_capped<T: Real>(
    n: usize,
    p: usize,
    kind: DesignKind,
    seed: u64,
    cap: usize,
) -> Result<Design<T>> {
    if n == 0 || p == 0 {
        return Err(Error::Domain(format!("design needs n, p >= 1, got n={n}, p={p}")));
    }
    let entries = n.saturating_mul(p);
    if entries > cap {
        return Err(Error::SizeCap {
            requested: entries,
            cap,
        });
    }
    let mut rng = rng_from_seed(seed);
    let mut x = DMatrix::<T>::zeros(n, p);
    let mut row = vec![T::zero(); p];
    for i in 0..n {
        sample_row(kind, &mut rng, &mut row);
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = *v;
        }
    }
    Ok(Design { x, kind, seed })
}

/// Ground-truth parameter with the given norm and a uniformly random direction.
pub fn sample_theta_star<T: Real>(p: usize, target_norm: T, seed: u64) -> Result<DVector<T>> {
    if !(target_norm >= T::zero()) {
        return Err(Error::Domain(format!("target norm must be >= 0, got {target_norm}")));
    }
    if target_norm == T::zero() {
        return Ok(DVector::zeros(p));
    }
    let mut rng = rng_from_seed(seed);
    loop {
        let g: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            let v = DVector::from_iterator(p, g.into_iter().map(|x| T::lit(x / norm)));
            // renormalise in T so the norm is exact to T's precision
            let nv = v.norm();
            return Ok(v * (target_norm / nv));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Real> {
    pub design: Design<T>,
    pub y: DVector<T>,
    /// The sampled `εᵢ`.
    pub noise: DVector<T>,
    pub theta_star: DVector<T>,
    pub ridge: RidgeFunction<T>,
    pub noise_kind: NoiseKind,
    pub noise_seed: u64,
}

impl<T: Real> Dataset<T> {
    pub fn x(&self) -> &DMatrix<T> {
        &self.design.x
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }
}

pub fn synthesize<T: Real>(
    design: Design<T>,
    theta_star: DVector<T>,
    ridge: RidgeFunction<T>,
    noise_kind: NoiseKind,
    seed: u64,
) -> Result<Dataset<T>> {
    if theta_star.len() != design.p() {
        return Err(Error::DimensionMismatch {
            what: "theta_star",
            expected: design.p(),
            found: theta_star.len(),
        });
    }
    let mut rng = rng_from_seed(seed);
    let n = design.n();
    let noise = DVector::from_iterator(n, (0..n).map(|_| noise_kind.sample::<T>(&mut rng)));
    let index = &design.x * &theta_star;
    let y = DVector::from_iterator(n, (0..n).map(|i| ridge.value(index[i]) + noise[i]));
    Ok(Dataset {
        design,
        y,
        noise,
        theta_star,
        ridge,
        noise_kind,
        noise_seed: seed,
    })
}

/// Sidecar metadata stored next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub noise_seed: u64,
    pub dist_kind: DesignKind,
    pub ridge_kind: LinkKind,
    pub ridge_param: f64,
    pub noise_kind: NoiseKind,
    pub theta_star: Vec<f64>,
}

impl<T: Real> Dataset<T> {
    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            n: self.n(),
            p: self.p(),
            seed: self.design.seed,
            noise_seed: self.noise_seed,
            dist_kind: self.design.kind,
            ridge_kind: self.ridge.kind(),
            ridge_param: self.ridge.param().as_f64(),
            noise_kind: self.noise_kind,
            theta_star: self.theta_star.iter().map(|v| v.as_f64()).collect(),
        }
    }

    /// Header `j0..j{p-1},y,eps`, then one row per observation.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let p = self.p();
        let mut header: Vec<String> = (0..p).map(|j| format!("j{j}")).collect();
        header.push("y".into());
        header.push("eps".into());
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for i in 0..self.n() {
            line.clear();
            for j in 0..p {
                line.push_str(&self.design.x[(i, j)].to_string());
                line.push(',');
            }
            line.push_str(&format!("{},{}", self.y[i], self.noise[i]));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn write_meta<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.meta()).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn read<R1: Read, R2: Read>(csv: R1, meta: R2) -> Result<Self> {
        let meta: DatasetMeta =
            serde_json::from_reader(meta).map_err(|e| Error::Parse(e.to_string()))?;
        let p = meta.p;
        let mut lines = BufReader::new(csv).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))??;
        let cols: Vec<&str> = header.split(',').collect();
        let expected: Vec<String> = (0..p)
            .map(|j| format!("j{j}"))
            .chain(["y".to_string(), "eps".to_string()])
            .collect();
        if cols != expected {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut x = DMatrix::<T>::zeros(meta.n, p);
        let mut y = DVector::<T>::zeros(meta.n);
        let mut noise = DVector::<T>::zeros(meta.n);
        let mut rows = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if rows >= meta.n {
                return Err(Error::Parse("more rows than metadata declares".into()));
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
                .collect::<Result<_>>()?;
            if vals.len() != p + 2 {
                return Err(Error::DimensionMismatch {
                    what: "csv row",
                    expected: p + 2,
                    found: vals.len(),
                });
            }
            for j in 0..p {
                x[(rows, j)] = T::lit(vals[j]);
            }
            y[rows] = T::lit(vals[p]);
            noise[rows] = T::lit(vals[p + 1]);
            rows += 1;
        }
        if rows != meta.n {
            return Err(Error::DimensionMismatch {
                what: "csv rows",
                expected: meta.n,
                found: rows,
            });
        }
        if meta.theta_star.len() != p {
            return Err(Error::DimensionMismatch {
                what: "theta_star",
                expected: p,
                found: meta.theta_star.len(),
            });
        }
        Ok(Dataset {
            design: Design {
                x,
                kind: meta.dist_kind,
                seed: meta.seed,
            },
            y,
            noise,
            theta_star: DVector::from_iterator(p, meta.theta_star.iter().map(|v| T::lit(*v))),
            ridge: make_ridge_function(meta.ridge_kind, T::lit(meta.ridge_param))?,
            noise_kind: meta.noise_kind,
            noise_seed: meta.noise_seed,
        })
    }
}
