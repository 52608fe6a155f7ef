//! Small descriptive statistics shared by the batch and Rt modules.

use alloc::vec::Vec;

/// Arithmetic mean, `None` for an empty slice.
pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().sum::<f64>() / xs.len() as f64)
}

fn sum_sq_dev(xs: &[f64], mu: f64) -> f64 {
    xs.iter().map(|x| (x - mu) * (x - mu)).sum()
}

/// Sample standard deviation (n - 1 denominator). Zero for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs).unwrap_or(0.0);
    libm::sqrt(sum_sq_dev(xs, mu) / (xs.len() - 1) as f64)
}

/// Population standard deviation (n denominator). Zero for an empty slice.
pub fn population_std(xs: &[f64]) -> f64 {
    match mean(xs) {
        Some(mu) => libm::sqrt(sum_sq_dev(xs, mu) / xs.len() as f64),
        None => 0.0,
    }
}

/// Sample skewness (moment estimator `m3 / m2^1.5`). Zero when the spread is zero.
pub fn skewness(xs: &[f64]) -> f64 {
    let Some(mu) = mean(xs) else { return 0.0 };
    let n = xs.len() as f64;
    let m2 = sum_sq_dev(xs, mu) / n;
    if m2 <= 0.0 {
        return 0.0;
    }
    let m3 = xs.iter().map(|x| (x - mu) * (x - mu) * (x - mu)).sum::<f64>() / n;
    m3 / libm::pow(m2, 1.5)
}

/// Pearson correlation of two equally long series. `None` if either is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n < 2 {
        return None;
    }
    let (a, b) = (&a[..n], &b[..n]);
    let ma = mean(a)?;
    let mb = mean(b)?;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / libm::sqrt(saa * sbb))
}

/// Lag in `-max_lag..=max_lag` at which `lagged[t + lag]` best correlates with
/// `reference[t]`. A positive result means `lagged` trails `reference`.
///
/// Ties go to the smallest absolute lag.
pub fn best_lag(reference: &[f64], lagged: &[f64], max_lag: usize) -> Option<i64> {
    let n = reference.len().min(lagged.len());
    let mut best: Option<(i64, f64)> = None;
    for lag in -(max_lag as i64)..=(max_lag as i64) {
        let (r, l): (Vec<f64>, Vec<f64>) = (0..n as i64)
            .filter_map(|t| {
                let s = t + lag;
                (s >= 0 && (s as usize) < n).then(|| (reference[t as usize], lagged[s as usize]))
            })
            .unzip();
        let Some(c) = correlation(&r, &l) else { continue };
        let better = match best {
            None => true,
            Some((bl, bc)) => c > bc + 1e-12 || ((c - bc).abs() <= 1e-12 && lag.abs() < bl.abs()),
        };
        if better {
            best = Some((lag, c));
        }
    }
    best.map(|(lag, _)| lag)
}

/// Streaming mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample_std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            libm::sqrt(self.m2 / (self.count - 1) as f64)
        }
    }

    pub fn population_std(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            libm::sqrt(self.m2 / self.count as f64)
        }
    }
}

impl Extend<f64> for Welford {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

/// Standard normal upper-tail probability.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

/// One-sided Welch z-statistic for `mean(a) > mean(b)`.
pub fn welch_z(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a)?, mean(b)?);
    let (sa, sb) = (sample_std(a), sample_std(b));
    let va = sa * sa / a.len() as f64;
    let vb = sb * sb / b.len() as f64;
    let se = libm::sqrt(va + vb);
    if se <= 0.0 {
        return None;
    }
    Some((ma - mb) / se)
}
