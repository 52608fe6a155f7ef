//! Augmented Dickey-Fuller unit-root test with a constant term.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Asymptotic 5% critical value for the regression with a constant.
pub const ADF_CRITICAL_5PCT: f64 = -2.86;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    /// The unit root is rejected, so the series looks stationary.
    pub stationary: bool,
    pub lags: usize,
}

/// Regresses `dy_t` on `1, y_{t-1}, dy_{t-1}, ..., dy_{t-lags}` and returns the
/// t-statistic of the `y_{t-1}` coefficient.
pub fn adf_test(series: &[f64], lags: usize) -> Result<AdfResult> {
    let n = series.len();
    if n <= lags + 3 {
        return Err(Error::SeriesTooShort { needed: lags + 4, got: n });
    }
    let first = series[0];
    if series.iter().all(|&x| x == first) {
        return Err(Error::Degenerate("constant series has no unit-root test".into()));
    }
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let k = lags + 2;
    let rows: Vec<usize> = (lags..dy.len()).collect();
    let m = rows.len();
    if m <= k {
        return Err(Error::SeriesTooShort { needed: lags + 4 + (k + 1 - m), got: n });
    }
    let x = DMatrix::<f64>::from_fn(m, k, |r, c| {
        let t = rows[r];
        match c {
            0 => 1.0,
            1 => series[t],
            _ => dy[t - (c - 1)],
        }
    });
    let y = DVector::<f64>::from_fn(m, |r, _| dy[rows[r]]);
    let xtx = x.transpose() * &x;
    let inv = xtx
        .cholesky()
        .ok_or_else(|| Error::Degenerate("collinear regressors in unit-root regression".into()))?
        .inverse();
    let beta = &inv * (x.transpose() * &y);
    let resid = &y - &x * &beta;
    let s2 = resid.norm_squared() / (m - k) as f64;
    let se = libm::sqrt(s2 * inv[(1, 1)]);
    if !(se > 0.0) {
        return Err(Error::Degenerate("unit-root regression fits exactly".into()));
    }
    let statistic = beta[1] / se;
    Ok(AdfResult { statistic, stationary: statistic < ADF_CRITICAL_5PCT, lags })
}

/// Conventional lag count `floor((n - 1)^(1/3))`.
pub fn default_lags(n: usize) -> usize {
    libm::floor(libm::cbrt(n.saturating_sub(1) as f64)) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_is_stationary() {
        let hits = (0..1000).filter(|&s| adf_test(&noise(s, 200), 1).unwrap().stationary).count();
        assert!(hits >= 950, "{hits}/1000");
    }

    #[test]
    fn random_walk_keeps_its_root() {
        let kept = (0..1000)
            .filter(|&s| {
                let mut acc = 0.0;
                let walk: Vec<f64> = noise(10_000 + s, 200)
                    .into_iter()
                    .map(|e| {
                        acc += e;
                        acc
                    })
                    .collect();
                !adf_test(&walk, 1).unwrap().stationary
            })
            .count();
        assert!(kept >= 900, "{kept}/1000");
    }

    #[test]
    fn constant_is_degenerate() {
        assert!(matches!(adf_test(&[4.0; 50], 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn too_short() {
        assert!(matches!(adf_test(&[1.0, 2.0, 1.0, 3.0], 1), Err(Error::SeriesTooShort { .. })));
    }
}
