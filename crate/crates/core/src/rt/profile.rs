//! Discretized Gamma infectivity profile.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1.87;
/// Rate parameter, so the mean generation time is `alpha / beta` days.
pub const DEFAULT_BETA: f64 = 0.28;
/// Cumulative mass that fixes the default support.
pub const DEFAULT_COVERAGE: f64 = 0.999;

/// Weights `w_1..=w_smax`; `weights[0]` is `w_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfectivityProfile {
    pub alpha: f64,
    pub beta: f64,
    pub weights: Vec<f64>,
}

impl InfectivityProfile {
    pub fn s_max(&self) -> usize {
        self.weights.len()
    }

    /// `w_s` for `s >= 1`, zero outside the support.
    pub fn w(&self, s: usize) -> f64 {
        if s == 0 {
            0.0
        } else {
            self.weights.get(s - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum()
    }
}

impl Default for InfectivityProfile {
    fn default() -> Self {
        gamma_profile(DEFAULT_ALPHA, DEFAULT_BETA, None).expect("default profile")
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_pre = a * libm::log(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        // series
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (sum * libm::exp(ln_pre)).min(1.0)
    } else {
        // Lentz continued fraction for Q
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - libm::exp(ln_pre) * h).max(0.0)
    }
}

/// Gamma(`alpha`, rate `beta`) integrated over `(s-1, s]` for `s = 1..=s_max`
/// and renormalized. Without `s_max` the support ends at the first `s` whose
/// cumulative mass reaches [`DEFAULT_COVERAGE`].
pub fn gamma_profile(alpha: f64, beta: f64, s_max: Option<usize>) -> Result<InfectivityProfile> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "gamma parameters must be positive, got alpha={alpha} beta={beta}"
        )));
    }
    let cdf = |s: usize| gamma_p(alpha, beta * s as f64);
    let s_max = match s_max {
        Some(0) => return Err(Error::InvalidArgument("s_max must be at least 1".into())),
        Some(s) => s,
        None => {
            let mut s = 1;
            while cdf(s) < DEFAULT_COVERAGE {
                s += 1;
            }
            s
        }
    };
    let mut weights: Vec<f64> = (1..=s_max).map(|s| cdf(s) - cdf(s - 1)).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("profile has no mass on its support".into()));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(InfectivityProfile { alpha, beta, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Gamma density integrated with composite Simpson on a fine grid.
    fn simpson_mass(alpha: f64, beta: f64, a: f64, b: f64) -> f64 {
        let pdf = |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            libm::exp(alpha * libm::log(beta) + (alpha - 1.0) * libm::log(x) - beta * x - libm::lgamma(alpha))
        };
        let n = 2000;
        let h = (b - a) / n as f64;
        let mut s = pdf(a) + pdf(b);
        for i in 1..n {
            s += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn default_profile_mean() {
        let p = InfectivityProfile::default();
        assert!((DEFAULT_ALPHA / DEFAULT_BETA - 6.678_571).abs() < 1e-5);
        assert!((p.mean() - DEFAULT_ALPHA / DEFAULT_BETA).abs() < 0.5, "mean {}", p.mean());
        assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(gamma_p(DEFAULT_ALPHA, DEFAULT_BETA * p.s_max() as f64) >= DEFAULT_COVERAGE);
        assert!(gamma_p(DEFAULT_ALPHA, DEFAULT_BETA * (p.s_max() - 1) as f64) < DEFAULT_COVERAGE);
    }

    #[test]
    fn matches_numeric_integration() {
        let p = gamma_profile(DEFAULT_ALPHA, DEFAULT_BETA, None).unwrap();
        let total = gamma_p(DEFAULT_ALPHA, DEFAULT_BETA * p.s_max() as f64);
        for s in 1..=p.s_max() {
            // the density has an integrable singularity-free start for alpha > 1
            let m = simpson_mass(DEFAULT_ALPHA, DEFAULT_BETA, (s - 1) as f64, s as f64) / total;
            assert!((p.w(s) - m).abs() < 1e-6, "s={s}: {} vs {m}", p.w(s));
        }
    }

    #[test]
    fn single_day_support() {
        let p = gamma_profile(2.0, 0.5, Some(1)).unwrap();
        assert_eq!(p.weights, alloc::vec![1.0]);
        assert_eq!(p.w(0), 0.0);
        assert_eq!(p.w(2), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gamma_profile(0.0, 1.0, None).is_err());
        assert!(gamma_profile(1.0, -1.0, None).is_err());
        assert!(gamma_profile(1.0, 1.0, Some(0)).is_err());
    }

    #[test]
    fn incomplete_gamma_known_values() {
        // P(1, x) = 1 - e^-x
        for x in [0.1, 1.0, 3.0, 10.0] {
            assert!((gamma_p(1.0, x) - (1.0 - libm::exp(-x))).abs() < 1e-14);
        }
        // P(2, x) = 1 - e^-x (1 + x)
        for x in [0.5, 2.0, 7.0] {
            assert!((gamma_p(2.0, x) - (1.0 - libm::exp(-x) * (1.0 + x))).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn weights_normalized(alpha in 0.3f64..8.0, beta in 0.05f64..3.0, s in 1usize..60) {
            let p = gamma_profile(alpha, beta, Some(s)).unwrap();
            prop_assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.weights.iter().all(|&w| w >= 0.0));
        }
    }
}
