//! Reproduction-number estimation from daily case counts.

use alloc::format;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod adf;
pub mod mcmc;
pub mod profile;
pub mod rsvd;
pub mod tikhonov;

pub use adf::{adf_test, AdfResult, ADF_CRITICAL_5PCT};
pub use mcmc::{mcmc_rt, McmcConfig};
pub use profile::{gamma_profile, InfectivityProfile};
pub use rsvd::{rsvd_deseason, Decomposition, RsvdConfig};
pub use tikhonov::{tikhonov_smooth, DEFAULT_SMOOTHING};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    SymptomOnset,
    Notification,
    Simulated,
}

/// Daily counts of new cases starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSeries {
    pub start: NaiveDate,
    pub counts: Vec<f64>,
    pub kind: CaseKind,
    /// Indices of days that were missing in the source and filled with zero.
    pub filled: Vec<usize>,
}

impl CaseSeries {
    /// Builds a gap-free series from dated rows. Dates must be strictly
    /// increasing; missing days become zeros and are listed in `filled`.
    pub fn from_dated(rows: &[(NaiveDate, f64)], kind: CaseKind) -> Result<Self> {
        let Some(&(start, _)) = rows.first() else {
            return Err(Error::SeriesTooShort { needed: 1, got: 0 });
        };
        let mut counts = Vec::with_capacity(rows.len());
        let mut filled = Vec::new();
        let mut prev: Option<NaiveDate> = None;
        for &(date, value) in rows {
            if let Some(p) = prev {
                if date <= p {
                    return Err(Error::InvalidArgument(format!("dates not increasing: {date} after {p}")));
                }
                let mut d = p.succ_opt().ok_or(Error::DayOutOfRange(0))?;
                while d < date {
                    filled.push(counts.len());
                    counts.push(0.0);
                    d = d.succ_opt().ok_or(Error::DayOutOfRange(0))?;
                }
            }
            if !(value >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative or missing count {value} on {date}")));
            }
            counts.push(value);
            prev = Some(date);
        }
        Ok(Self { start, counts, kind, filled })
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + chrono::Days::new(i as u64)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum RtMethod {
    Naive,
    Windowed { tau: usize },
    Smoothed { alpha: f64 },
    DeseasonedMcmc,
}

/// Point series with optional credible band; `None` marks days without an
/// estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtEstimate {
    pub method: RtMethod,
    pub point: Vec<Option<f64>>,
    pub lower: Option<Vec<Option<f64>>>,
    pub upper: Option<Vec<Option<f64>>>,
}

impl RtEstimate {
    /// Point values with gaps replaced by the previous value (or the first
    /// defined one), for correlation work.
    pub fn filled_points(&self) -> Vec<f64> {
        let first = self.point.iter().flatten().copied().next().unwrap_or(0.0);
        let mut last = first;
        self.point
            .iter()
            .map(|p| {
                if let Some(v) = p {
                    last = *v;
                }
                last
            })
            .collect()
    }
}

/// Total infectiousness `sum_{s=1..min(t,smax)} w_s I_{t-s}` for every `t`.
pub fn infectiousness(series: &[f64], profile: &InfectivityProfile) -> Vec<f64> {
    (0..series.len())
        .map(|t| (1..=profile.s_max().min(t)).map(|s| profile.w(s) * series[t - s]).sum())
        .collect()
}

/// `R_t = I_t / sum_s w_s I_{t-s}`, with a gap where the denominator is zero.
pub fn naive_rt(series: &[f64], profile: &InfectivityProfile) -> Result<RtEstimate> {
    if series.len() <= profile.s_max() {
        return Err(Error::SeriesTooShort { needed: profile.s_max() + 1, got: series.len() });
    }
    let lambda = infectiousness(series, profile);
    let point = series
        .iter()
        .zip(&lambda)
        .map(|(&i, &l)| (l > 0.0).then(|| i / l))
        .collect();
    Ok(RtEstimate { method: RtMethod::Naive, point, lower: None, upper: None })
}

/// Sum of the last `tau + 1` days, `sum_{s=t-tau..t} I_s`, truncated at the start.
pub fn window_sums(series: &[f64], tau: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for t in 0..series.len() {
        acc += series[t];
        if t > tau {
            acc -= series[t - tau - 1];
        }
        out.push(acc);
    }
    out
}

/// Naive estimator applied to rolling window sums of width `tau`.
pub fn windowed_rt(series: &[f64], profile: &InfectivityProfile, tau: usize) -> Result<RtEstimate> {
    if tau == 0 {
        return Err(Error::InvalidArgument("window must be at least one day".into()));
    }
    let mut est = naive_rt(&window_sums(series, tau), profile)?;
    est.method = RtMethod::Windowed { tau };
    Ok(est)
}

/// Naive estimator on the Tikhonov-smoothed series.
pub fn smoothed_rt(series: &[f64], profile: &InfectivityProfile, alpha: f64) -> Result<RtEstimate> {
    let smooth = tikhonov_smooth(series, alpha)?;
    let mut est = naive_rt(&smooth, profile)?;
    est.method = RtMethod::Smoothed { alpha };
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, dd: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, dd).unwrap()
    }

    #[test]
    fn constant_series_gives_one() {
        let p = InfectivityProfile::default();
        let est = naive_rt(&vec![100.0; 120], &p).unwrap();
        for v in &est.point[p.s_max()..] {
            assert!((v.unwrap() - 1.0).abs() < 1e-9);
        }
        assert_eq!(est.point[0], None);
        let w = windowed_rt(&vec![100.0; 120], &p, 14).unwrap();
        for v in &w.point[p.s_max() + 14..] {
            assert!((v.unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn geometric_growth_closed_form() {
        let p = InfectivityProfile::default();
        let series: Vec<f64> = (0..100).map(|t| libm::pow(1.05, t as f64)).collect();
        let expected = 1.0 / (1..=p.s_max()).map(|s| p.w(s) * libm::pow(1.05, -(s as f64))).sum::<f64>();
        let est = naive_rt(&series, &p).unwrap();
        for v in &est.point[p.s_max()..] {
            assert!((v.unwrap() - expected).abs() < 1e-9 * expected);
        }
    }

    #[test]
    fn zero_window_is_a_gap() {
        let p = profile::gamma_profile(2.0, 0.5, Some(5)).unwrap();
        let mut s = vec![10.0; 30];
        for x in &mut s[10..15] {
            *x = 0.0;
        }
        let est = naive_rt(&s, &p).unwrap();
        assert_eq!(est.point[15], None);
        assert!(est.point[16].is_some());
    }

    #[test]
    fn too_short() {
        let p = InfectivityProfile::default();
        assert!(matches!(naive_rt(&vec![1.0; p.s_max()], &p), Err(Error::SeriesTooShort { .. })));
        assert!(windowed_rt(&vec![1.0; 100], &p, 0).is_err());
    }

    #[test]
    fn window_scaling() {
        let p = InfectivityProfile::default();
        let s: Vec<f64> = (0..80).map(|t| 5.0 + (t % 7) as f64 + t as f64 * 0.3).collect();
        let s7: Vec<f64> = s.iter().map(|x| 7.0 * x).collect();
        let a = windowed_rt(&s, &p, 14).unwrap();
        let b = windowed_rt(&s7, &p, 14).unwrap();
        for (x, y) in a.point.iter().zip(&b.point) {
            match (x, y) {
                (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12 * x.abs().max(1.0)),
                (None, None) => {}
                _ => panic!("gap mismatch"),
            }
        }
    }

    #[test]
    fn case_series_gap_fill() {
        let rows = [(d(2020, 3, 1), 3.0), (d(2020, 3, 2), 4.0), (d(2020, 3, 5), 6.0)];
        let s = CaseSeries::from_dated(&rows, CaseKind::Notification).unwrap();
        assert_eq!(s.counts, vec![3.0, 4.0, 0.0, 0.0, 6.0]);
        assert_eq!(s.filled, vec![2, 3]);
        assert_eq!(s.date(4), d(2020, 3, 5));
        let dup = [(d(2020, 3, 1), 3.0), (d(2020, 3, 1), 4.0)];
        assert!(CaseSeries::from_dated(&dup, CaseKind::Notification).is_err());
        let three = [(d(2020, 3, 1), 1.0), (d(2020, 3, 2), 2.0), (d(2020, 3, 3), 3.0)];
        assert_eq!(CaseSeries::from_dated(&three, CaseKind::SymptomOnset).unwrap().len(), 3);
    }

    proptest! {
        #[test]
        fn naive_scaling_invariance(xs in proptest::collection::vec(0.0f64..500.0, 40..80), c in 0.01f64..100.0) {
            let p = profile::gamma_profile(1.87, 0.28, Some(20)).unwrap();
            let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
            let a = naive_rt(&xs, &p).unwrap();
            let b = naive_rt(&scaled, &p).unwrap();
            for (x, y) in a.point.iter().zip(&b.point) {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0)),
                    (None, None) => {}
                    _ => prop_assert!(false, "gap mismatch"),
                }
            }
        }
    }
}
