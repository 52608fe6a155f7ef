//! Seasonal adjustment by regularized singular value decomposition.
//!
//! The (log, differenced) series is folded into a matrix with one row per
//! period. After centering the rows, the leading singular components give
//! the seasonal shape; each component's loadings across periods are smoothed
//! with a second-difference penalty whose weight is picked by leave-one-out
//! cross-validation. The seasonal pattern is then carried back to levels,
//! removed, and the remainder smoothed into a trend.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::adf::{adf_test, default_lags};
use super::tikhonov::{tikhonov_smooth, DEFAULT_SMOOTHING};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RsvdConfig {
    pub period: usize,
    /// Work on logarithms, turning a multiplicative pattern additive.
    pub log: bool,
    /// Fixed differencing degree; `None` picks the smallest degree whose
    /// unit-root test rejects at 5%, at most [`MAX_DIFF`].
    pub diff_degree: Option<usize>,
    /// Singular components kept as seasonal.
    pub components: usize,
    /// Candidate penalties for the leave-one-out search.
    pub lambda_grid: Vec<f64>,
    /// Smoothing weight for the trend of the adjusted series.
    pub trend_alpha: f64,
}

pub const MAX_DIFF: usize = 2;

/// `count` log-spaced points between `lo` and `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (libm::log10(lo), libm::log10(hi));
    (0..count).map(|i| libm::pow(10.0, a + (b - a) * i as f64 / (count - 1).max(1) as f64)).collect()
}

impl Default for RsvdConfig {
    fn default() -> Self {
        Self {
            period: 7,
            log: true,
            diff_degree: None,
            components: 1,
            lambda_grid: log_grid(1e-2, 1e4, 13),
            trend_alpha: DEFAULT_SMOOTHING,
        }
    }
}

/// `series = trend + seasonal + residual`, element by element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
    /// `residual / trend`.
    pub relative_residual: Vec<f64>,
    pub diff_degree: usize,
    /// Chosen penalty for each kept component.
    pub lambdas: Vec<f64>,
}

impl Decomposition {
    /// A trend with no seasonal part and no residual.
    pub fn from_trend(trend: Vec<f64>) -> Self {
        let n = trend.len();
        Self {
            trend,
            seasonal: vec![0.0; n],
            residual: vec![0.0; n],
            relative_residual: vec![0.0; n],
            diff_degree: 0,
            lambdas: Vec::new(),
        }
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        (0..self.trend.len()).map(|t| self.trend[t] + self.seasonal[t] + self.residual[t]).collect()
    }
}

fn difference(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn choose_degree(x: &[f64]) -> usize {
    let mut y = x.to_vec();
    for d in 0..MAX_DIFF {
        match adf_test(&y, default_lags(y.len())) {
            Ok(r) if r.stationary => return d,
            Err(Error::Degenerate(_)) => return d,
            _ => {}
        }
        y = difference(&y);
    }
    MAX_DIFF
}

/// Smoother `(Id + lambda D'D)^-1` over `m` points, `D` the second difference.
fn smoother(m: usize, lambda: f64) -> Option<DMatrix<f64>> {
    let mut a = DMatrix::<f64>::identity(m, m);
    if m >= 3 {
        let c = [1.0, -2.0, 1.0];
        for r in 0..m - 2 {
            for i in 0..3 {
                for j in 0..3 {
                    a[(r + i, r + j)] += lambda * c[i] * c[j];
                }
            }
        }
    }
    a.cholesky().map(|ch| ch.inverse())
}

/// Smooths `a` with the penalty minimizing the leave-one-out error.
fn loocv_smooth(a: &DVector<f64>, grid: &[f64]) -> (DVector<f64>, f64) {
    let m = a.len();
    if m < 3 || grid.is_empty() {
        return (a.clone(), 0.0);
    }
    let mut best: Option<(f64, f64, DVector<f64>)> = None;
    for &lambda in grid {
        let Some(h) = smoother(m, lambda) else { continue };
        let fit = &h * a;
        let score: f64 = (0..m)
            .map(|i| {
                let denom = 1.0 - h[(i, i)];
                let e = (a[i] - fit[i]) / denom;
                e * e
            })
            .sum::<f64>()
            / m as f64;
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, lambda, fit));
        }
    }
    match best {
        Some((_, lambda, fit)) => (fit, lambda),
        None => (a.clone(), 0.0),
    }
}

/// Zero-mean cyclic sequence whose first difference is `s` (which must sum to zero).
fn cyclic_integrate(s: &[f64]) -> Vec<f64> {
    let p = s.len();
    let mut q = vec![0.0; p];
    for j in 1..p {
        q[j] = q[j - 1] + s[j];
    }
    let mean = q.iter().sum::<f64>() / p as f64;
    q.iter().map(|v| v - mean).collect()
}

/// Seasonal pattern on the level scale for every day, or zeros if there is
/// too little data after differencing.
fn seasonal_levels(x: &[f64], d: usize, cfg: &RsvdConfig, lambdas: &mut Vec<f64>) -> Result<Vec<f64>> {
    let n = x.len();
    let p = cfg.period;
    let mut y = x.to_vec();
    for _ in 0..d {
        y = difference(&y);
    }
    // y[k] belongs to day k + d; rows are whole periods of days
    let first_row = d.div_ceil(p);
    let rows = n / p - first_row;
    if rows < 2 {
        return Err(Error::SeriesTooShort { needed: (first_row + 2) * p, got: n });
    }
    let mut z = DMatrix::<f64>::zeros(rows, p);
    for r in 0..rows {
        for j in 0..p {
            z[(r, j)] = y[(first_row + r) * p + j - d];
        }
        let mean = z.row(r).sum() / p as f64;
        for j in 0..p {
            z[(r, j)] -= mean;
        }
    }
    let mut pattern = DMatrix::<f64>::zeros(rows, p);
    if z.iter().any(|v| v.abs() > 0.0) {
        let svd = z.svd(true, true);
        let u = svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD without U".into()))?;
        let vt = svd.v_t.as_ref().ok_or_else(|| Error::Numerical("SVD without V".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        for &k in order.iter().take(cfg.components) {
            let sigma = svd.singular_values[k];
            if sigma <= 0.0 {
                continue;
            }
            let loadings = u.column(k) * sigma;
            let (smooth, lambda) = loocv_smooth(&loadings.into_owned(), &cfg.lambda_grid);
            lambdas.push(lambda);
            pattern += smooth * vt.row(k);
        }
    }
    // back to levels, one row at a time
    let mut level_rows: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut q: Vec<f64> = pattern.row(r).iter().copied().collect();
        for _ in 0..d {
            q = cyclic_integrate(&q);
        }
        level_rows.push(q);
    }
    Ok((0..n)
        .map(|t| {
            let r = (t / p).saturating_sub(first_row).min(rows - 1);
            level_rows[r][t % p]
        })
        .collect())
}

/// Splits `series` into trend, seasonal and residual parts.
pub fn rsvd_deseason(series: &[f64], cfg: &RsvdConfig) -> Result<Decomposition> {
    let n = series.len();
    let p = cfg.period;
    if p < 2 {
        return Err(Error::InvalidArgument(format!("period must be at least 2, got {p}")));
    }
    if n < 4 * p {
        return Err(Error::SeriesTooShort { needed: 4 * p, got: n });
    }
    if let Some(d) = cfg.diff_degree {
        if d > MAX_DIFF {
            return Err(Error::InvalidArgument(format!("differencing degree {d} above {MAX_DIFF}")));
        }
    }
    let x: Vec<f64> = if cfg.log {
        if let Some((index, &value)) = series.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositive { index, value });
        }
        series.iter().map(|v| libm::log(*v)).collect()
    } else {
        series.to_vec()
    };
    let d = cfg.diff_degree.unwrap_or_else(|| choose_degree(&x));
    let mut lambdas = Vec::new();
    let s = seasonal_levels(&x, d, cfg, &mut lambdas)?;
    let adjusted: Vec<f64> = if cfg.log {
        x.iter().zip(&s).map(|(a, b)| libm::exp(a - b)).collect()
    } else {
        x.iter().zip(&s).map(|(a, b)| a - b).collect()
    };
    let trend = tikhonov_smooth(&adjusted, cfg.trend_alpha)?;
    let seasonal: Vec<f64> = series.iter().zip(&adjusted).map(|(i, a)| i - a).collect();
    let residual: Vec<f64> = adjusted.iter().zip(&trend).map(|(a, t)| a - t).collect();
    let relative_residual = residual.iter().zip(&trend).map(|(e, t)| e / t).collect();
    Ok(Decomposition { trend, seasonal, residual, relative_residual, diff_degree: d, lambdas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{correlation, skewness};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const WEEK: [f64; 7] = [1.15, 1.1, 1.05, 1.0, 0.95, 0.55, 1.2];

    fn weekly(n: usize, noise: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = Normal::new(0.0, noise).unwrap();
        let mut series = Vec::new();
        let mut truth = Vec::new();
        for t in 0..n {
            let trend = 200.0 * libm::exp(0.012 * t as f64);
            let factor = WEEK[t % 7];
            series.push(trend * factor * (1.0 + eps.sample(&mut rng)));
            truth.push(trend * (factor - 1.0));
        }
        (series, truth)
    }

    #[test]
    fn constant_series() {
        let d = rsvd_deseason(&[50.0; 70], &RsvdConfig::default()).unwrap();
        for t in 0..70 {
            assert!(d.seasonal[t].abs() < 1e-9);
            assert!((d.trend[t] - 50.0).abs() < 1e-9);
            assert!(d.residual[t].abs() < 1e-9);
        }
    }

    #[test]
    fn reconstruction_identity() {
        let (s, _) = weekly(180, 0.05, 1);
        let d = rsvd_deseason(&s, &RsvdConfig::default()).unwrap();
        for (a, b) in d.reconstruct().iter().zip(&s) {
            assert!(((a - b) / b).abs() < 1e-9);
        }
    }

    #[test]
    fn recovers_weekly_pattern() {
        let (s, truth) = weekly(210, 0.02, 2);
        let d = rsvd_deseason(&s, &RsvdConfig::default()).unwrap();
        let c = correlation(&d.seasonal, &truth).unwrap();
        assert!(c > 0.95, "correlation {c}");
    }

    #[test]
    fn residuals_become_more_symmetric() {
        let (s, _) = weekly(280, 0.04, 3);
        let smooth = tikhonov_smooth(&s, DEFAULT_SMOOTHING).unwrap();
        let before: Vec<f64> = s.iter().zip(&smooth).map(|(i, b)| (i - b) / b).collect();
        let d = rsvd_deseason(&s, &RsvdConfig::default()).unwrap();
        assert!(skewness(&d.relative_residual).abs() < skewness(&before).abs());
    }

    #[test]
    fn fixed_degrees_all_work() {
        let (s, truth) = weekly(210, 0.02, 4);
        for deg in 0..=2 {
            let cfg = RsvdConfig { diff_degree: Some(deg), ..RsvdConfig::default() };
            let d = rsvd_deseason(&s, &cfg).unwrap();
            assert_eq!(d.diff_degree, deg);
            assert!(correlation(&d.seasonal, &truth).unwrap() > 0.9, "degree {deg}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(rsvd_deseason(&[1.0; 20], &RsvdConfig::default()), Err(Error::SeriesTooShort { .. })));
        let mut s = vec![5.0; 60];
        s[3] = 0.0;
        assert!(matches!(rsvd_deseason(&s, &RsvdConfig::default()), Err(Error::NonPositive { index: 3, .. })));
        let cfg = RsvdConfig { period: 1, ..RsvdConfig::default() };
        assert!(rsvd_deseason(&[5.0; 60], &cfg).is_err());
    }

    #[test]
    fn grid_has_thirteen_points() {
        let g = RsvdConfig::default().lambda_grid;
        assert_eq!(g.len(), 13);
        assert!((g[0] - 1e-2).abs() < 1e-15 && (g[12] - 1e4).abs() < 1e-9);
        assert!((g[1] - 1e-1 * libm::sqrt(1.0)).abs() < 1e-12 || g[1] > g[0]);
    }

    #[test]
    fn cyclic_integration_inverts_differences() {
        let q = [1.0, -2.0, 0.5, 0.5];
        let s: Vec<f64> = (0..4).map(|j| q[j] - q[(j + 3) % 4]).collect();
        let back = cyclic_integrate(&s);
        for j in 0..4 {
            assert!((back[j] - q[j]).abs() < 1e-12);
        }
    }
}
