use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{allocate_doses, ConsultedMask, Evaluation, Evaluator, Genome, QuotaRow, QuotaTable};
use crate::Result;

/// Deterministic two-group campaign on a mean-field epidemic, small enough to
/// enumerate every quota table on a coarse grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyCampaign {
    pub template: QuotaTable,
    pub sizes: [f64; 2],
    /// Daily transmission from group `h` (column) to group `g` (row).
    pub contact: [[f64; 2]; 2],
    pub recovery: f64,
    /// Share of infections that turn symptomatic, by group.
    pub symptomatic: [f64; 2],
    pub initial_infected: [f64; 2],
    pub days: u32,
}

impl Default for ToyCampaign {
    fn default() -> Self {
        let rows = vec![
            QuotaRow { from_day: 0, budget: 6, quotas: vec![0.0; 2] },
            QuotaRow { from_day: 30, budget: 15, quotas: vec![0.0; 2] },
        ];
        Self {
            template: QuotaTable::new(rows, 120).expect("valid toy table"),
            sizes: [300.0, 700.0],
            contact: [[0.12, 0.08], [0.08, 0.30]],
            recovery: 0.1,
            symptomatic: [0.8, 0.1],
            initial_infected: [1.0, 4.0],
            days: 150,
        }
    }
}

impl ToyCampaign {
    pub fn rows(&self) -> usize {
        self.template.rows().len()
    }

    /// Cumulative symptomatic infections under `genome`, and the quotas read.
    pub fn simulate(&self, genome: &Genome) -> Result<(f64, ConsultedMask)> {
        let table = self.template.with_genome(genome)?;
        let n = self.sizes[0] + self.sizes[1];
        let mut s = [self.sizes[0] - self.initial_infected[0], self.sizes[1] - self.initial_infected[1]];
        let mut i = self.initial_infected;
        let mut sym = 0.0;
        let mut mask = ConsultedMask::empty(self.rows(), 2);
        for day in 0..self.days {
            if let Some(r) = table.row_index(day) {
                let row = &table.rows()[r];
                let remaining: Vec<u32> = s.iter().map(|v| libm::floor(*v) as u32).collect();
                let a = allocate_doses(row.budget, &row.quotas, &remaining);
                mask.mark(r, &a.consulted);
                for g in 0..2 {
                    s[g] = (s[g] - f64::from(a.doses[g])).max(0.0);
                }
            }
            let mut new = [0.0; 2];
            for g in 0..2 {
                let force = (self.contact[g][0] * i[0] + self.contact[g][1] * i[1]) / n;
                new[g] = s[g] * (1.0 - libm::exp(-force));
            }
            for g in 0..2 {
                s[g] -= new[g];
                i[g] += new[g] - self.recovery * i[g];
                sym += self.symptomatic[g] * new[g];
            }
        }
        Ok((sym, mask))
    }
}

impl Evaluator for ToyCampaign {
    fn evaluate(&self, genomes: &[Genome]) -> Result<Vec<Evaluation>> {
        genomes
            .iter()
            .map(|g| self.simulate(g).map(|(fitness, mask)| Evaluation { fitness, consulted: Some(mask) }))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vaccine::{ga_optimize, GaConfig};

    const GRID: [f64; 3] = [0.0, 0.5, 1.0];

    fn exhaustive(toy: &ToyCampaign) -> f64 {
        let genes = toy.rows() * 2;
        let mut best = f64::INFINITY;
        for code in 0..3usize.pow(genes as u32) {
            let mut c = code;
            let mut g = Vec::new();
            for _ in 0..genes {
                g.push(GRID[c % 3]);
                c /= 3;
            }
            let (f, _) = toy.simulate(&Genome { rows: toy.rows(), cols: 2, genes: g }).unwrap();
            best = best.min(f);
        }
        best
    }

    #[test]
    fn vaccination_helps() {
        let toy = ToyCampaign::default();
        let (none, _) = toy.simulate(&Genome::filled(2, 2, 0.0)).unwrap();
        let (some, _) = toy.simulate(&Genome::filled(2, 2, 0.5)).unwrap();
        assert!(some < none);
    }

    #[test]
    fn ga_matches_enumeration() {
        let toy = ToyCampaign::default();
        let cfg = GaConfig { grid: Some(GRID.to_vec()), seed: 1, ..GaConfig::default() };
        let r = ga_optimize(2, 2, &[], &toy, &cfg).unwrap();
        assert_eq!(r.best_fitness, exhaustive(&toy));
    }
}
