//! Metropolis sampler for `R_t` with noise carried over from the residuals.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::profile::InfectivityProfile;
use super::rsvd::Decomposition;
use super::{RtEstimate, RtMethod};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub chains: usize,
    pub tune: usize,
    pub keep: usize,
    pub prior_mean: f64,
    pub prior_sd: f64,
    /// Days in the rolling window for the residual noise model.
    pub noise_window: usize,
    /// Central credible mass of the reported band.
    pub band: f64,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { chains: 4, tune: 1000, keep: 500, prior_mean: 1.3, prior_sd: 10.0, noise_window: 7, band: 0.9, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcResult {
    pub estimate: RtEstimate,
    /// Kept draws per day across all chains; empty where no estimate exists.
    pub samples: Vec<Vec<f64>>,
    pub acceptance: f64,
}

/// Rolling mean and population std over the last `window` values, truncated at the start.
pub fn rolling_noise(eps: &[f64], window: usize) -> Vec<(f64, f64)> {
    (0..eps.len())
        .map(|t| {
            let lo = (t + 1).saturating_sub(window);
            let w = &eps[lo..=t];
            let mu = w.iter().sum::<f64>() / w.len() as f64;
            let var = w.iter().map(|e| (e - mu) * (e - mu)).sum::<f64>() / w.len() as f64;
            (mu, libm::sqrt(var))
        })
        .collect()
}

struct ChainOut {
    draws: Vec<Vec<f64>>,
    accepted: u64,
    proposed: u64,
}

fn log_target(r: f64, k: f64, lambda: f64, cfg: &McmcConfig) -> f64 {
    let mean = r * lambda;
    let z = (r - cfg.prior_mean) / cfg.prior_sd;
    k * libm::log(mean) - mean - 0.5 * z * z
}

/// One chain. Each sweep draws a noisy case series from the residual model,
/// recomputes the infectiousness and updates every day's `R_t` by a
/// random-walk Metropolis step against the Poisson likelihood of the trend.
fn run_chain(dec: &Decomposition, profile: &InfectivityProfile, cfg: &McmcConfig, chain: usize) -> ChainOut {
    let trend = &dec.trend;
    let n = trend.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64 + 1);
    let noise = rolling_noise(&dec.relative_residual, cfg.noise_window);
    let clean = super::infectiousness(trend, profile);
    let mut r: Vec<f64> = (0..n).map(|t| if clean[t] > 0.0 { trend[t] / clean[t] } else { cfg.prior_mean }).collect();
    let mut step: Vec<f64> = (0..n).map(|t| r[t].max(0.05) / libm::sqrt(trend[t].max(1.0))).collect();
    let mut acc_window = vec![0u32; n];
    let mut draws = vec![Vec::with_capacity(cfg.keep); n];
    let mut noisy = vec![0.0; n];
    let (mut accepted, mut proposed) = (0u64, 0u64);
    for it in 0..cfg.tune + cfg.keep {
        for t in 0..n {
            let (mu, sd) = noise[t];
            let e = if sd > 0.0 { Normal::new(mu, sd).map(|d| d.sample(&mut rng)).unwrap_or(mu) } else { mu };
            noisy[t] = (trend[t] * (1.0 + e)).max(0.0);
        }
        let lambda = super::infectiousness(&noisy, profile);
        for t in 0..n {
            if lambda[t] <= 0.0 {
                continue;
            }
            let k = trend[t];
            let z: f64 = StandardNormal.sample(&mut rng);
            let cand = r[t] + step[t] * z;
            let u: f64 = rng.random();
            let ok = cand > 0.0
                && libm::log(u) < log_target(cand, k, lambda[t], cfg) - log_target(r[t], k, lambda[t], cfg);
            if ok {
                r[t] = cand;
                acc_window[t] += 1;
            }
            if it >= cfg.tune {
                proposed += 1;
                accepted += u64::from(ok);
                draws[t].push(r[t]);
            }
        }
        if it < cfg.tune && (it + 1) % 50 == 0 {
            for t in 0..n {
                let rate = f64::from(acc_window[t]) / 50.0;
                step[t] *= libm::exp(rate - 0.44);
                acc_window[t] = 0;
            }
        }
    }
    ChainOut { draws, accepted, proposed }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Posterior median and central band of `R_t` for every day with history.
pub fn mcmc_rt(dec: &Decomposition, profile: &InfectivityProfile, cfg: &McmcConfig) -> Result<McmcResult> {
    if let Some((index, &value)) = dec.trend.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonPositive { index, value });
    }
    if cfg.chains == 0 || cfg.keep == 0 {
        return Err(Error::InvalidArgument("need at least one chain and one kept draw".into()));
    }
    if !(0.0..1.0).contains(&cfg.band) || !(cfg.prior_sd > 0.0) || cfg.noise_window == 0 {
        return Err(Error::InvalidArgument("band, prior spread or noise window out of range".into()));
    }
    let n = dec.trend.len();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); n];
    let (mut accepted, mut proposed) = (0u64, 0u64);
    for chain in 0..cfg.chains {
        let out = run_chain(dec, profile, cfg, chain);
        accepted += out.accepted;
        proposed += out.proposed;
        for (all, mine) in samples.iter_mut().zip(out.draws) {
            all.extend(mine);
        }
    }
    let tail = (1.0 - cfg.band) / 2.0;
    let mut point = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for s in &samples {
        if s.is_empty() {
            point.push(None);
            lower.push(None);
            upper.push(None);
            continue;
        }
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        point.push(Some(quantile(&sorted, 0.5)));
        lower.push(Some(quantile(&sorted, tail)));
        upper.push(Some(quantile(&sorted, 1.0 - tail)));
    }
    Ok(McmcResult {
        estimate: RtEstimate { method: RtMethod::DeseasonedMcmc, point, lower: Some(lower), upper: Some(upper) },
        samples,
        acceptance: if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 },
    })
}
