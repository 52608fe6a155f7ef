//! Vaccination campaigns driven by quota tables, and a genetic optimizer for
//! the quotas.
//!
//! A quota `q_g` is the fraction of group `g`'s still unvaccinated members
//! that the planner asks to dose on a given day. Groups are served left to
//! right, each taking `min(budget left, ceil(q_g * remaining_g))`, so groups
//! on the left can absorb a whole day's budget.

mod campaign;
mod ga;
mod toy;

pub use campaign::*;
pub use ga::*;
pub use toy::*;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Day after which no more first doses are planned.
pub const CAMPAIGN_END_DAY: u32 = 738;

const PLAIN_CSV: &str = include_str!("../../tables/quota_plain.csv");
const WISE_CSV: &str = include_str!("../../tables/quota_wise.csv");
const GA_CSV: &str = include_str!("../../tables/quota_ga.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotaRow {
    pub from_day: u32,
    /// Doses available each day, in agents.
    pub budget: u32,
    pub quotas: Vec<f64>,
}

/// Piecewise-constant daily budgets and quotas, one row per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotaTable {
    rows: Vec<QuotaRow>,
    end_day: u32,
}

impl QuotaTable {
    pub fn new(rows: Vec<QuotaRow>, end_day: u32) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        let Some(first) = rows.first() else {
            return bad("quota table has no rows".into());
        };
        let width = first.quotas.len();
        if width == 0 {
            return bad("quota rows have no groups".into());
        }
        for (i, row) in rows.iter().enumerate() {
            if row.quotas.len() != width {
                return bad(format!("row {i} has {} quotas, expected {width}", row.quotas.len()));
            }
            if let Some(q) = row.quotas.iter().find(|q| !(0.0..=1.0).contains(*q)) {
                return bad(format!("row {i} has quota {q} outside [0, 1]"));
            }
            if i > 0 && row.from_day <= rows[i - 1].from_day {
                return bad(format!("row {i} does not start after the previous row"));
            }
        }
        if end_day <= rows[rows.len() - 1].from_day {
            return bad(format!("end day {end_day} is not after the last row"));
        }
        Ok(Self { rows, end_day })
    }

    /// Parses `from_day,budget,q1..qn` rows followed by a `day,end` line.
    /// A header line and blank lines are ignored.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut end = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("from_day") {
                continue;
            }
            let err = |m: &str| Error::InvalidArgument(format!("quota line {}: {m}", n + 1));
            if end.is_some() {
                return Err(err("rows after the end marker"));
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let day: u32 = fields[0].parse().map_err(|_| err("bad day"))?;
            if fields.get(1) == Some(&"end") {
                end = Some(day);
                continue;
            }
            if fields.len() < 3 {
                return Err(err("expected a budget and at least one quota"));
            }
            let budget: u32 = fields[1].parse().map_err(|_| err("bad budget"))?;
            let quotas = fields[2..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| err("bad quota")))
                .collect::<Result<Vec<_>>>()?;
            rows.push(QuotaRow { from_day: day, budget, quotas });
        }
        let end = end.ok_or_else(|| Error::InvalidArgument("quota table lacks an end line".into()))?;
        Self::new(rows, end)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("from_day,budget");
        for g in 1..=self.groups() {
            out.push_str(&format!(",q{g}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{},{}", row.from_day, row.budget));
            for q in &row.quotas {
                out.push_str(&format!(",{q}"));
            }
            out.push('\n');
        }
        out.push_str(&format!("{},end\n", self.end_day));
        out
    }

    /// Equal quotas of 0.1 for every group.
    pub fn plain() -> Self {
        Self::from_csv(PLAIN_CSV).expect("bundled table parses")
    }

    /// Regular workers, regular people and young people postponed to day 493.
    pub fn wise() -> Self {
        Self::from_csv(WISE_CSV).expect("bundled table parses")
    }

    /// Published optimizer result with vaccinated people still spreading.
    pub fn ga_published() -> Self {
        Self::from_csv(GA_CSV).expect("bundled table parses")
    }

    pub fn rows(&self) -> &[QuotaRow] {
        &self.rows
    }

    pub fn end_day(&self) -> u32 {
        self.end_day
    }

    pub fn groups(&self) -> usize {
        self.rows[0].quotas.len()
    }

    pub fn start_day(&self) -> u32 {
        self.rows[0].from_day
    }

    /// Index of the row in force on `day`, if any.
    pub fn row_index(&self, day: u32) -> Option<usize> {
        if day >= self.end_day {
            return None;
        }
        self.rows.iter().rposition(|r| r.from_day <= day)
    }

    /// The same calendar with every budget set to zero.
    pub fn zero_budget(&self) -> Self {
        let mut t = self.clone();
        t.rows.iter_mut().for_each(|r| r.budget = 0);
        t
    }

    /// The quotas as a genome.
    pub fn genome(&self) -> Genome {
        Genome {
            rows: self.rows.len(),
            cols: self.groups(),
            genes: self.rows.iter().flat_map(|r| r.quotas.iter().copied()).collect(),
        }
    }

    /// Replaces the quotas, keeping days and budgets.
    pub fn with_genome(&self, genome: &Genome) -> Result<Self> {
        if genome.rows != self.rows.len() || genome.cols != self.groups() {
            return Err(Error::InvalidArgument(format!(
                "genome is {}x{}, table is {}x{}",
                genome.rows,
                genome.cols,
                self.rows.len(),
                self.groups()
            )));
        }
        let mut rows = self.rows.clone();
        for (r, row) in rows.iter_mut().enumerate() {
            row.quotas.copy_from_slice(genome.row(r));
        }
        Self::new(rows, self.end_day)
    }
}

/// The quota matrix of a table, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub rows: usize,
    pub cols: usize,
    pub genes: Vec<f64>,
}

impl Genome {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, genes: vec![value; rows * cols] }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.genes[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.genes[r * self.cols + c]
    }
}

/// Which quotas the allocation actually read, row-major like [`Genome`].
/// A quota is skipped when its group is fully vaccinated or when the groups
/// to its left took the whole budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsultedMask {
    pub rows: usize,
    pub cols: usize,
    pub flags: Vec<bool>,
}

impl ConsultedMask {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self { rows, cols, flags: vec![false; rows * cols] }
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.flags[r * self.cols + c]
    }

    pub fn mark(&mut self, r: usize, consulted: &[bool]) {
        for (c, &f) in consulted.iter().enumerate() {
            self.flags[r * self.cols + c] |= f;
        }
    }

    pub fn union(&self, other: &ConsultedMask) -> ConsultedMask {
        ConsultedMask {
            rows: self.rows,
            cols: self.cols,
            flags: self.flags.iter().zip(&other.flags).map(|(a, b)| *a || *b).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub doses: Vec<u32>,
    pub consulted: Vec<bool>,
}

impl Allocation {
    pub fn total(&self) -> u32 {
        self.doses.iter().sum()
    }
}

/// Splits one day's budget over the groups, left to right.
pub fn allocate_doses(budget: u32, quotas: &[f64], remaining: &[u32]) -> Allocation {
    debug_assert_eq!(quotas.len(), remaining.len());
    let mut left = budget;
    let mut doses = vec![0; remaining.len()];
    let mut consulted = vec![false; remaining.len()];
    for (g, (&q, &rem)) in quotas.iter().zip(remaining).enumerate() {
        if left == 0 {
            break;
        }
        if rem == 0 {
            continue;
        }
        consulted[g] = true;
        let want = libm::ceil(q * f64::from(rem)) as u32;
        let give = want.min(left).min(rem);
        doses[g] = give;
        left -= give;
    }
    Allocation { doses, consulted }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn left_absorption() {
        let a = allocate_doses(5, &[0.1; 7], &[124, 81, 162, 1234, 1032, 245, 891]);
        assert_eq!(a.doses, [5, 0, 0, 0, 0, 0, 0]);
        assert_eq!(a.consulted, [true, false, false, false, false, false, false]);
    }

    #[test]
    fn zero_quotas_spend_nothing() {
        let a = allocate_doses(20, &[0.0; 7], &[10; 7]);
        assert_eq!(a.total(), 0);
        assert!(a.consulted.iter().all(|c| *c));
    }

    #[test]
    fn completed_group_passes_budget_on() {
        let a = allocate_doses(20, &[1.0, 0.5, 1.0], &[10, 8, 100]);
        assert_eq!(a.doses, [10, 4, 6]);
        let a = allocate_doses(20, &[0.3, 0.1], &[0, 50]);
        assert_eq!(a.doses, [0, 5]);
        assert_eq!(a.consulted, [false, true]);
    }

    #[test]
    fn bundled_tables() {
        for t in [QuotaTable::plain(), QuotaTable::wise(), QuotaTable::ga_published()] {
            assert_eq!(t.rows().len(), 5);
            assert_eq!(t.groups(), 7);
            assert_eq!(t.start_day(), 373);
            assert_eq!(t.end_day(), CAMPAIGN_END_DAY);
            assert_eq!(t.rows().iter().map(|r| r.budget).collect::<Vec<_>>(), [5, 10, 10, 10, 20]);
        }
        assert_eq!(QuotaTable::wise().rows()[1].quotas[3], 0.0);
        assert_eq!(QuotaTable::ga_published().rows()[0].quotas[3], 0.79);
        assert_eq!(QuotaTable::ga_published().rows()[4].quotas[4], 1.0);
    }

    #[test]
    fn row_lookup() {
        let t = QuotaTable::plain();
        assert_eq!(t.row_index(372), None);
        assert_eq!(t.row_index(373), Some(0));
        assert_eq!(t.row_index(432), Some(0));
        assert_eq!(t.row_index(433), Some(1));
        assert_eq!(t.row_index(737), Some(4));
        assert_eq!(t.row_index(738), None);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let t = QuotaTable::ga_published();
        assert_eq!(QuotaTable::from_csv(&t.to_csv()).unwrap(), t);
        assert!(QuotaTable::from_csv("373,5,0.1\n").is_err());
        assert!(QuotaTable::from_csv("373,5,1.5\n400,end\n").is_err());
        assert!(QuotaTable::from_csv("373,5,0.1\n373,5,0.1\n400,end\n").is_err());
        assert!(QuotaTable::from_csv("373,5,0.1,0.2\n380,5,0.1\n400,end\n").is_err());
    }

    #[test]
    fn genome_round_trip() {
        let t = QuotaTable::ga_published();
        let g = t.genome();
        assert_eq!(g.get(1, 0), 0.94);
        assert_eq!(t.with_genome(&g).unwrap(), t);
        assert!(t.with_genome(&Genome::filled(2, 7, 0.5)).is_err());
    }

    proptest! {
        #[test]
        fn allocation_respects_budget_and_remaining(
            budget in 0u32..200,
            quotas in prop::collection::vec(0.0f64..=1.0, 7),
            remaining in prop::collection::vec(0u32..300, 7),
        ) {
            let a = allocate_doses(budget, &quotas, &remaining);
            prop_assert!(a.total() <= budget);
            for g in 0..7 {
                prop_assert!(a.doses[g] <= remaining[g]);
                if a.doses[g] > 0 {
                    prop_assert!(a.consulted[g]);
                }
            }
            // Left absorption: a group only receives doses when everything
            // to its left got what its quota asked for.
            for g in 0..7 {
                if a.doses[g] > 0 {
                    for h in 0..g {
                        let want = libm::ceil(quotas[h] * f64::from(remaining[h])) as u32;
                        prop_assert_eq!(a.doses[h], want.min(remaining[h]));
                    }
                }
            }
        }
    }
}
