//! Parameters that the intervention calendar can change day by day.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Daily contagion and mobility parameters.
///
/// Percent fields are in `[0, 100]`. The limitation percentages only act
/// while `lockdown` is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpidemicParams {
    /// Base probability of contagion for one exposure.
    pub prob: f64,
    /// Percent correction of the spreading power of an asymptomatic agent.
    pub d_pct: f64,
    /// Contagion radius for temporary and open-air presence, in world units.
    pub radius: f64,
    pub lockdown: bool,
    pub pct_any_leaving: f64,
    pub pct_not_fragile_leaving: f64,
    pub pct_open_factories: f64,
    pub stop_fragile_workers: bool,
    pub activate_schools: bool,
    pub pct_students: f64,
    /// Hospitals and nursing homes refuse visitors.
    pub isolate_care: bool,
    pub asym_regular_pct: f64,
    pub asym_fragile_pct: f64,
    pub incubation_days: u32,
    pub duration_min: u32,
    pub duration_max: u32,
    /// Per-day death probability of a symptomatic agent, scaled by
    /// intrinsic susceptibility.
    pub cfr_daily: f64,
    /// Percent of new symptomatic agents living in a house who are moved to
    /// a hospital for the rest of their infection.
    pub hospital_pct: f64,
    /// Spreading multiplier of an infected agent that already received a dose:
    /// 1 spreads normally, 0.5 halves the spread, 0 blocks it.
    pub vaccinated_spread: f64,
}

impl Default for EpidemicParams {
    fn default() -> Self {
        Self {
            prob: 0.05,
            d_pct: -50.0,
            radius: 0.2,
            lockdown: false,
            pct_any_leaving: 100.0,
            pct_not_fragile_leaving: 0.0,
            pct_open_factories: 100.0,
            stop_fragile_workers: false,
            activate_schools: true,
            pct_students: 100.0,
            isolate_care: false,
            asym_regular_pct: 95.0,
            asym_fragile_pct: 20.0,
            incubation_days: 5,
            duration_min: 14,
            duration_max: 42,
            cfr_daily: 0.0007,
            hospital_pct: 10.0,
            vaccinated_spread: 1.0,
        }
    }
}

impl EpidemicParams {
    pub fn validate(&self) -> Result<()> {
        let pct = [
            ("d_pct", self.d_pct, -100.0),
            ("pct_any_leaving", self.pct_any_leaving, 0.0),
            ("pct_not_fragile_leaving", self.pct_not_fragile_leaving, 0.0),
            ("pct_open_factories", self.pct_open_factories, 0.0),
            ("pct_students", self.pct_students, 0.0),
            ("asym_regular_pct", self.asym_regular_pct, 0.0),
            ("asym_fragile_pct", self.asym_fragile_pct, 0.0),
            ("hospital_pct", self.hospital_pct, 0.0),
        ];
        for (name, value, lo) in pct {
            if !(lo..=100.0).contains(&value) {
                return Err(Error::Config(alloc::format!("{name}={value} outside [{lo}, 100]")));
            }
        }
        if !(0.0..=1.0).contains(&self.prob) {
            return Err(Error::Config(alloc::format!("prob={} outside [0, 1]", self.prob)));
        }
        if !(0.0..=1.0).contains(&self.cfr_daily) {
            return Err(Error::Config(alloc::format!("cfr_daily={} outside [0, 1]", self.cfr_daily)));
        }
        if !(0.0..=1.0).contains(&self.vaccinated_spread) {
            return Err(Error::Config(alloc::format!(
                "vaccinated_spread={} outside [0, 1]",
                self.vaccinated_spread
            )));
        }
        if !(self.radius > 0.0) {
            return Err(Error::Config(alloc::format!("radius={} must be positive", self.radius)));
        }
        if self.duration_min == 0 || self.duration_min > self.duration_max {
            return Err(Error::Config(alloc::format!(
                "infection duration [{}, {}] is empty",
                self.duration_min, self.duration_max
            )));
        }
        if self.incubation_days >= self.duration_min {
            return Err(Error::Config(alloc::format!(
                "incubation ({}) must be shorter than the minimum infection duration ({})",
                self.incubation_days, self.duration_min
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        EpidemicParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let p = EpidemicParams { pct_any_leaving: 120.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = EpidemicParams { prob: 1.5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = EpidemicParams { radius: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
