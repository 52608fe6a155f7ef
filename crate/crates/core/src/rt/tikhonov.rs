//! Smoothing by fitting a regularized derivative and integrating it back.
//!
//! With `X` the lower-triangular integration matrix, the fit minimizes
//! `|I - X w|^2 + alpha^2 |G w|^2` where `G` takes second differences of the
//! increments `w[1..]`. The level `w[0]` is left free, so a linear ramp is
//! reproduced exactly. Substituting `S = X w` turns the problem into
//! `(Id + alpha^2 M'M) S = I` with `M` the third-difference operator on `S`,
//! which is symmetric positive definite for every `alpha` and avoids the
//! squared conditioning of the integration matrix.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Regularization weight that balances smoothness and detail on daily data.
pub const DEFAULT_SMOOTHING: f64 = 100.0;

/// Third-difference rows `(-1, 3, -3, 1)`.
const THIRD: [f64; 4] = [-1.0, 3.0, -3.0, 1.0];

/// Smoothed series `X w` for the regularization weight `alpha`.
pub fn tikhonov_smooth(series: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 4 {
        return Err(Error::SeriesTooShort { needed: 4, got: n });
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("smoothing weight {alpha} must be finite and >= 0")));
    }
    if alpha == 0.0 {
        return Ok(series.to_vec());
    }
    let a2 = alpha * alpha;
    let mut a = DMatrix::<f64>::identity(n, n);
    for row in 0..n - 3 {
        for (i, ci) in THIRD.iter().enumerate() {
            for (j, cj) in THIRD.iter().enumerate() {
                a[(row + i, row + j)] += a2 * ci * cj;
            }
        }
    }
    let chol = a.cholesky().ok_or_else(|| Error::Numerical("smoothing system not positive definite".into()))?;
    let x = chol.solve(&DVector::from_column_slice(series));
    Ok(x.iter().copied().collect())
}

/// Increments `w` whose running sum is `series` (`w[0]` is the level).
pub fn derivative(series: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    series
        .iter()
        .map(|&x| {
            let d = x - prev;
            prev = x;
            d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct minimization over the increments with the integration matrix,
    /// solved by a dense least-squares (QR) on the stacked system.
    fn oracle(series: &[f64], alpha: f64) -> Vec<f64> {
        let n = series.len();
        let x = DMatrix::<f64>::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 });
        let rows = n - 3;
        let mut stacked = DMatrix::<f64>::zeros(n + rows, n);
        stacked.view_mut((0, 0), (n, n)).copy_from(&x);
        for r in 0..rows {
            stacked[(n + r, r + 1)] = alpha;
            stacked[(n + r, r + 2)] = -2.0 * alpha;
            stacked[(n + r, r + 3)] = alpha;
        }
        let mut rhs = DVector::<f64>::zeros(n + rows);
        rhs.rows_mut(0, n).copy_from_slice(series);
        let qr = stacked.clone().qr();
        let qtb = qr.q().transpose() * rhs;
        let w = qr.r().solve_upper_triangular(&qtb).unwrap();
        (x * w).iter().copied().collect()
    }

    #[test]
    fn zero_weight_is_identity() {
        let s = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        assert_eq!(tikhonov_smooth(&s, 0.0).unwrap(), s);
    }

    #[test]
    fn ramp_is_reproduced() {
        let s: Vec<f64> = (0..60).map(|t| 3.0 + 2.0 * t as f64).collect();
        let out = tikhonov_smooth(&s, 100.0).unwrap();
        for t in 1..59 {
            assert!(((out[t] - s[t]) / s[t]).abs() < 0.01);
        }
    }

    #[test]
    fn agrees_with_increment_formulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..40).map(|t| 10.0 + libm::sin(t as f64 / 4.0) * 5.0 + rng.random::<f64>()).collect();
        for alpha in [0.5, 3.0, 20.0] {
            let a = tikhonov_smooth(&s, alpha).unwrap();
            let b = oracle(&s, alpha);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-7 * y.abs().max(1.0), "alpha {alpha}: {x} vs {y}");
            }
        }
    }

    fn rms_second_diff(s: &[f64]) -> f64 {
        let d: Vec<f64> = s.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
        libm::sqrt(d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64)
    }

    #[test]
    fn noisy_sine_gets_smoother() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<f64> =
            (0..200).map(|t| 50.0 + 20.0 * libm::sin(t as f64 / 15.0) + rng.random_range(-5.0..5.0)).collect();
        let out = tikhonov_smooth(&s, 100.0).unwrap();
        assert!(rms_second_diff(&out) < rms_second_diff(&s));
    }

    #[test]
    fn short_series() {
        assert!(matches!(tikhonov_smooth(&[1.0, 2.0, 3.0], 1.0), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn derivative_inverts_running_sum() {
        let s = [2.0, 5.0, 4.0, 10.0];
        let w = derivative(&s);
        assert_eq!(w, vec![2.0, 3.0, -1.0, 6.0]);
    }

    proptest! {
        #[test]
        fn linear_in_input(xs in proptest::collection::vec(-50f64..50.0, 8..40),
                           a in -3f64..3.0, b in -3f64..3.0, alpha in 0.1f64..200.0) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * 0.5 + i as f64).collect();
            let combo: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
            let sx = tikhonov_smooth(&xs, alpha).unwrap();
            let sy = tikhonov_smooth(&ys, alpha).unwrap();
            let sc = tikhonov_smooth(&combo, alpha).unwrap();
            for i in 0..xs.len() {
                let expect = a * sx[i] + b * sy[i];
                prop_assert!((sc[i] - expect).abs() < 1e-7 * (1.0 + expect.abs()));
            }
        }
    }
}
