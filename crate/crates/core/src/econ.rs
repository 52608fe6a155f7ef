//! Input-output accounting of lockdown costs.
//!
//! Amounts are in GDP points per thousand of the regional economy. The
//! demand shocks behind the three scenarios were never published, so the
//! scenarios are kept as stored ledgers and checked for internal
//! consistency; [`leontief_impact`] remains a general calculator.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MULTIPLIERS_CSV: &str = include_str!("../tables/multipliers.csv");

/// Days in the months of the ledgers.
pub const DAYS_PER_MONTH: f64 = 30.0;

/// Rounding slack of the published figures.
pub const ROUNDING: f64 = 0.2;

/// Slack when checking that impact components add up to the stated total.
/// The figures carry two decimals, so anything above half a cent is a real
/// disagreement.
pub const COMPONENT_SLACK: f64 = 0.05;

pub const HEALTH_EXPENDITURE: f64 = -2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorMultipliers {
    pub sector: String,
    pub final_demand_share: f64,
    pub direct: f64,
    pub indirect: f64,
    pub induced: f64,
    pub total_production: f64,
    pub added_value: f64,
}

impl SectorMultipliers {
    pub fn component_sum(&self) -> f64 {
        self.direct + self.indirect + self.induced
    }
}

/// Stated total production multiplier that differs from the sum of its parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierWarning {
    pub sector: String,
    pub component_sum: f64,
    pub stated_total: f64,
}

impl core::fmt::Display for MultiplierWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}: direct + indirect + induced = {:.2} but the total multiplier is {:.2}",
            self.sector, self.component_sum, self.stated_total
        )
    }
}

/// Per-sector multipliers, stored as published.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierTable {
    pub sectors: Vec<SectorMultipliers>,
}

impl MultiplierTable {
    /// The five-sector regional table.
    pub fn regional() -> Self {
        Self::from_csv(MULTIPLIERS_CSV).expect("bundled table parses")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut sectors = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("sector,") {
                continue;
            }
            let err = |m: &str| Error::InvalidArgument(format!("multiplier line {}: {m}", n + 1));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 7 {
                return Err(err("expected 7 fields"));
            }
            let v = f[1..]
                .iter()
                .map(|x| x.parse::<f64>().map_err(|_| err("bad number")))
                .collect::<Result<Vec<_>>>()?;
            if v.iter().any(|x| *x <= 0.0) {
                return Err(err("multipliers must be positive"));
            }
            sectors.push(SectorMultipliers {
                sector: String::from(f[0]),
                final_demand_share: v[0],
                direct: v[1],
                indirect: v[2],
                induced: v[3],
                total_production: v[4],
                added_value: v[5],
            });
        }
        if sectors.is_empty() {
            return Err(Error::InvalidArgument("multiplier table is empty".into()));
        }
        Ok(Self { sectors })
    }

    /// Rows whose components do not add up to the stated total.
    pub fn warnings(&self) -> Vec<MultiplierWarning> {
        self.sectors
            .iter()
            .filter(|s| (s.component_sum() - s.total_production).abs() > COMPONENT_SLACK)
            .map(|s| MultiplierWarning {
                sector: s.sector.clone(),
                component_sum: s.component_sum(),
                stated_total: s.total_production,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impact {
    pub production: f64,
    pub added_value: f64,
}

/// Total production and added value moved by a final-demand shock, one
/// entry per sector.
pub fn leontief_impact(shock: &[f64], table: &MultiplierTable) -> Result<Impact> {
    if shock.len() != table.sectors.len() {
        return Err(Error::InvalidArgument(format!(
            "shock has {} sectors, table has {}",
            shock.len(),
            table.sectors.len()
        )));
    }
    let mut out = Impact { production: 0.0, added_value: 0.0 };
    for (x, s) in shock.iter().zip(&table.sectors) {
        out.production += x * s.total_production;
        out.added_value += x * s.added_value;
    }
    Ok(out)
}

/// Lockdown scenarios: everything non-essential closed (A), high-risk
/// sectors closed (B), fragile workers kept home on sick pay (C).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EconScenario {
    A,
    B,
    C,
}

impl EconScenario {
    pub const ALL: [EconScenario; 3] = [EconScenario::A, EconScenario::B, EconScenario::C];

    fn index(self) -> usize {
        self as usize
    }
}

impl core::fmt::Display for EconScenario {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(["A", "B", "C"][self.index()])
    }
}

impl core::str::FromStr for EconScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(EconScenario::A),
            "B" | "b" => Ok(EconScenario::B),
            "C" | "c" => Ok(EconScenario::C),
            _ => Err(Error::InvalidArgument(format!("unknown economic scenario {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impacts {
    pub production: f64,
    pub added_value: f64,
    pub taxes: f64,
}

impl Impacts {
    pub fn scaled(self, k: f64) -> Impacts {
        Impacts { production: self.production * k, added_value: self.added_value * k, taxes: self.taxes * k }
    }

    pub fn cells(self) -> [f64; 3] {
        [self.production, self.added_value, self.taxes]
    }
}

const DAILY: [Impacts; 3] = [
    Impacts { production: -4.86, added_value: -2.12, taxes: -0.91 },
    Impacts { production: -1.23, added_value: -0.55, taxes: -0.24 },
    Impacts { production: -0.69, added_value: -0.30, taxes: -0.35 },
];

const MONTHLY: [Impacts; 3] = [
    Impacts { production: -145.7, added_value: -63.7, taxes: -27.4 },
    Impacts { production: -36.9, added_value: -16.6, taxes: -7.1 },
    Impacts { production: -20.7, added_value: -9.1, taxes: -10.6 },
];

/// Three-month losses as published: health, added value, taxes, human
/// capital, total.
const THREE_MONTHS: [[f64; 5]; 3] =
    [[-2.0, -191.0, -82.1, -13.4, -288.6], [-2.0, -49.8, -21.4, -13.4, -86.6], [-2.0, -27.2, -31.9, 0.0, -61.1]];

/// Human capital lost to distance learning; zero when schools stay open.
const HUMAN_CAPITAL: [f64; 3] = [-13.4, -13.4, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLedger {
    pub scenario: EconScenario,
    pub daily: Impacts,
    pub monthly_stored: Impacts,
    /// `DAYS_PER_MONTH` times the daily impacts.
    pub monthly_computed: Impacts,
}

impl ScenarioLedger {
    /// Whether each monthly cell agrees with its daily one within rounding.
    pub fn consistent(&self) -> [bool; 3] {
        let s = self.monthly_stored.cells();
        let c = self.monthly_computed.cells();
        [0, 1, 2].map(|k| (s[k] - c[k]).abs() <= ROUNDING + 1e-9)
    }

    /// Impacts over a span of days.
    pub fn over_days(&self, days: u32) -> Impacts {
        self.daily.scaled(f64::from(days))
    }
}

pub fn scenario_ledger(scenario: EconScenario) -> ScenarioLedger {
    let k = scenario.index();
    ScenarioLedger {
        scenario,
        daily: DAILY[k],
        monthly_stored: MONTHLY[k],
        monthly_computed: DAILY[k].scaled(DAYS_PER_MONTH),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalLoss {
    pub health: f64,
    pub added_value: f64,
    pub taxes: f64,
    pub human_capital: f64,
}

impl TotalLoss {
    pub fn total(&self) -> f64 {
        self.health + self.added_value + self.taxes + self.human_capital
    }
}

/// Losses over `months` of restrictions. With no months only the extra
/// health expenditure remains.
pub fn total_loss(scenario: EconScenario, months: u32) -> TotalLoss {
    let k = scenario.index();
    let m = f64::from(months);
    TotalLoss {
        health: HEALTH_EXPENDITURE,
        added_value: MONTHLY[k].added_value * m,
        taxes: MONTHLY[k].taxes * m,
        human_capital: if months > 0 { HUMAN_CAPITAL[k] } else { 0.0 },
    }
}

/// The published three-month breakdown and its stated total.
pub fn published_three_months(scenario: EconScenario) -> (TotalLoss, f64) {
    let r = THREE_MONTHS[scenario.index()];
    (TotalLoss { health: r[0], added_value: r[1], taxes: r[2], human_capital: r[3] }, r[4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol + 1e-9
    }

    #[test]
    fn unit_shocks() {
        let t = MultiplierTable::regional();
        let m = leontief_impact(&[0.0, 1.0, 0.0, 0.0, 0.0], &t).unwrap();
        assert!(close(m.production, 4.5, 1e-12) && close(m.added_value, 1.6, 1e-12));
        let z = leontief_impact(&[0.0; 5], &t).unwrap();
        assert_eq!((z.production, z.added_value), (0.0, 0.0));
        let all = leontief_impact(&[1.0; 5], &t).unwrap();
        assert!(close(all.production, 3.2 + 4.5 + 3.2 + 3.1 + 3.4, 1e-12));
        assert!(leontief_impact(&[1.0; 4], &t).is_err());
    }

    #[test]
    fn inconsistent_rows_are_flagged() {
        let w = MultiplierTable::regional().warnings();
        let names: Vec<&str> = w.iter().map(|w| w.sector.as_str()).collect();
        assert!(names.contains(&"manufacturing"));
        assert!(names.contains(&"construction"));
        assert!(!names.contains(&"agriculture"));
        assert!(!names.contains(&"services"));
        let c = w.iter().find(|w| w.sector == "construction").unwrap();
        assert!(close(c.component_sum, 4.2, 1e-12));
        assert_eq!(c.stated_total, 3.2);
    }

    #[test]
    fn monthly_cells_follow_daily_ones() {
        for s in EconScenario::ALL {
            assert_eq!(scenario_ledger(s).consistent(), [true; 3], "{s}");
        }
        let a = scenario_ledger(EconScenario::A);
        assert!(close(a.monthly_computed.added_value, -63.6, 1e-9));
        let c = scenario_ledger(EconScenario::C);
        assert!(close(c.monthly_computed.taxes, -10.5, 1e-9));
        assert_eq!(scenario_ledger(EconScenario::B).over_days(0).cells(), [0.0; 3]);
    }

    #[test]
    fn published_totals_add_up() {
        for s in EconScenario::ALL {
            let (parts, stated) = published_three_months(s);
            assert!(close(parts.total(), stated, ROUNDING), "{s}");
        }
        let (a, _) = published_three_months(EconScenario::A);
        assert!(close(a.total(), -288.5, 1e-9));
    }

    #[test]
    fn computed_losses_track_published_ones() {
        for s in EconScenario::ALL {
            let got = total_loss(s, 3);
            let (want, stated) = published_three_months(s);
            assert!(close(got.added_value, want.added_value, ROUNDING));
            assert!(close(got.taxes, want.taxes, ROUNDING));
            assert!(close(got.total(), stated, ROUNDING));
        }
        assert_eq!(total_loss(EconScenario::C, 3).human_capital, 0.0);
        let none = total_loss(EconScenario::A, 0);
        assert_eq!(none.total(), HEALTH_EXPENDITURE);
    }

    #[test]
    fn scenario_names() {
        assert_eq!("b".parse::<EconScenario>().unwrap(), EconScenario::B);
        assert!("D".parse::<EconScenario>().is_err());
    }

    proptest! {
        #[test]
        fn impact_is_linear(
            x in prop::collection::vec(-10.0f64..10.0, 5),
            y in prop::collection::vec(-10.0f64..10.0, 5),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let t = MultiplierTable::regional();
            let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let l = leontief_impact(&mix, &t).unwrap();
            let ix = leontief_impact(&x, &t).unwrap();
            let iy = leontief_impact(&y, &t).unwrap();
            prop_assert!((l.production - (a * ix.production + b * iy.production)).abs() < 1e-9);
            prop_assert!((l.added_value - (a * ix.added_value + b * iy.added_value)).abs() < 1e-9);
        }
    }
}
