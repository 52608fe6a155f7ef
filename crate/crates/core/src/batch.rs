//! Per-run summaries, checkpoint statistics and the two-stage second-wave
//! selection.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::calendar::{checkpoint_days, CHECKPOINT_LABELS};
use crate::engine::{run_epidemic, RunRecord, Snapshot, StopRule};
use crate::params::EpidemicParams;
use crate::script::Schedule;
use crate::stats::Welford;
use crate::world::{build_world, WorldConfig};
use crate::{Error, Result};

pub const JUN1: usize = 0;
pub const SEP20: usize = 1;
pub const DEC15: usize = 2;

/// What a batch keeps of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub duration: u32,
    pub truncated: bool,
    pub cum_symptomatic: u32,
    pub cum_total: u32,
    pub deceased: u32,
    pub checkpoints: [Option<Snapshot>; 5],
}

impl From<&RunRecord> for RunSummary {
    fn from(r: &RunRecord) -> Self {
        Self {
            seed: r.seed,
            duration: r.duration,
            truncated: r.truncated,
            cum_symptomatic: r.cum_symptomatic,
            cum_total: r.cum_total,
            deceased: r.deceased,
            checkpoints: r.checkpoints,
        }
    }
}

impl RunSummary {
    /// Snapshot at checkpoint `k`. `Ok(None)` when the epidemic ended before
    /// that day; an error when the run covered the day but has no snapshot.
    pub fn checkpoint(&self, k: usize) -> Result<Option<Snapshot>> {
        let day = checkpoint_days()[k];
        match self.checkpoints[k] {
            Some(s) => Ok(Some(s)),
            None if self.duration >= day => Err(Error::MissingCheckpoint(format!(
                "seed {} ran to day {} without a {} snapshot",
                self.seed, self.duration, CHECKPOINT_LABELS[k]
            ))),
            None => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub scenario: String,
    pub base_seed: u64,
    pub config_hash: String,
    pub runs: Vec<RunSummary>,
}

/// Seed of replication `index` in a batch started from `base`.
pub fn run_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}

/// Builds a fresh world for `seed` and runs it to the end.
pub fn run_single(
    config: &WorldConfig,
    params: &EpidemicParams,
    schedule: &Schedule,
    seed: u64,
    stop: &StopRule,
) -> Result<RunRecord> {
    let mut world = build_world(config, seed)?;
    world.set_base_params(params.clone())?;
    Ok(run_epidemic(&mut world, schedule, stop))
}

/// Interval open on the left, closed on the right: `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfOpen {
    pub lo: f64,
    pub hi: f64,
}

impl HalfOpen {
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionCriteria {
    /// Cumulative symptomatic on 2020-06-01.
    pub jun1_symptomatic: HalfOpen,
    /// Cumulative symptomatic on 2020-09-20.
    pub sep20_symptomatic: HalfOpen,
    /// Minimum ratio of the 2020-12-15 cumulative total to the 2020-09-20 one.
    pub ratio: f64,
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        Self {
            jun1_symptomatic: HalfOpen { lo: 10.0, hi: 70.0 },
            sep20_symptomatic: HalfOpen { lo: 20.0, hi: 90.0 },
            ratio: 2.0,
        }
    }
}

impl SelectionCriteria {
    /// Quiet-summer test. Runs that ended before either date fail it.
    pub fn stage1(&self, run: &RunSummary) -> Result<bool> {
        let (Some(jun), Some(sep)) = (run.checkpoint(JUN1)?, run.checkpoint(SEP20)?) else {
            return Ok(false);
        };
        Ok(self.jun1_symptomatic.contains(f64::from(jun.cum_symptomatic))
            && self.sep20_symptomatic.contains(f64::from(sep.cum_symptomatic)))
    }

    /// Autumn growth test, applied to stage-1 runs.
    pub fn stage2(&self, run: &RunSummary) -> Result<bool> {
        let (Some(sep), Some(dec)) = (run.checkpoint(SEP20)?, run.checkpoint(DEC15)?) else {
            return Ok(false);
        };
        Ok(f64::from(dec.cum_total) >= self.ratio * f64::from(sep.cum_total))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SecondWave {
    pub stage1: Vec<RunSummary>,
    pub stage2: Vec<RunSummary>,
}

pub fn select_second_wave(runs: &[RunSummary], criteria: &SelectionCriteria) -> Result<SecondWave> {
    let mut out = SecondWave::default();
    for run in runs {
        if criteria.stage1(run)? {
            out.stage1.push(*run);
            if criteria.stage2(run)? {
                out.stage2.push(*run);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdKind {
    #[default]
    Sample,
    Population,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub count: u64,
    pub mean: f64,
    pub std: f64,
    /// Only one value contributed, so `std` is reported as zero.
    pub single: bool,
}

/// Column statistics in the layout of the checkpoint tables: symptomatic and
/// total at each checkpoint, then final symptomatic, final total and days.
pub fn summarize(runs: &[RunSummary], kind: StdKind) -> Result<Vec<ColumnStats>> {
    if runs.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut columns: Vec<(String, Welford)> = Vec::new();
    for label in CHECKPOINT_LABELS {
        columns.push((format!("{label}_sym"), Welford::new()));
        columns.push((format!("{label}_total"), Welford::new()));
    }
    columns.push((String::from("end_sym"), Welford::new()));
    columns.push((String::from("end_total"), Welford::new()));
    columns.push((String::from("days"), Welford::new()));
    for run in runs {
        for k in 0..CHECKPOINT_LABELS.len() {
            if let Some(s) = run.checkpoint(k)? {
                columns[2 * k].1.push(f64::from(s.cum_symptomatic));
                columns[2 * k + 1].1.push(f64::from(s.cum_total));
            }
        }
        let n = columns.len();
        columns[n - 3].1.push(f64::from(run.cum_symptomatic));
        columns[n - 2].1.push(f64::from(run.cum_total));
        columns[n - 1].1.push(f64::from(run.duration));
    }
    Ok(columns
        .into_iter()
        .map(|(name, w)| ColumnStats {
            name,
            count: w.count(),
            mean: if w.count() == 0 { f64::NAN } else { w.mean() },
            std: match kind {
                StdKind::Sample => w.sample_std(),
                StdKind::Population => w.population_std(),
            },
            single: w.count() == 1,
        })
        .collect())
}

/// Looks up one column of a summary table by name.
pub fn column<'a>(table: &'a [ColumnStats], name: &str) -> Option<&'a ColumnStats> {
    table.iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(sym: u32, total: u32) -> Option<Snapshot> {
        Some(Snapshot { cum_symptomatic: sym, cum_total: total })
    }

    fn run(seed: u64, jun: u32, sep: u32, sep_total: u32, dec_total: u32) -> RunSummary {
        RunSummary {
            seed,
            duration: 500,
            truncated: false,
            cum_symptomatic: 0,
            cum_total: dec_total,
            deceased: 0,
            checkpoints: [snap(jun, jun * 2), snap(sep, sep_total), snap(dec_total / 3, dec_total), snap(0, 0), snap(0, 0)],
        }
    }

    #[test]
    fn interior_point_in_both() {
        let r = run(1, 40, 60, 150, 450);
        let sel = select_second_wave(&[r], &SelectionCriteria::default()).unwrap();
        assert_eq!(sel.stage1.len(), 1);
        assert_eq!(sel.stage2.len(), 1);
    }

    #[test]
    fn boundaries() {
        let c = SelectionCriteria::default();
        assert!(!c.stage1(&run(1, 10, 60, 100, 300)).unwrap());
        assert!(c.stage1(&run(1, 70, 90, 100, 300)).unwrap());
        assert!(!c.stage1(&run(1, 71, 60, 100, 300)).unwrap());
        assert!(!c.stage1(&run(1, 40, 20, 100, 300)).unwrap());
        assert!(c.stage2(&run(1, 40, 60, 100, 200)).unwrap());
        assert!(!c.stage2(&run(1, 40, 60, 100, 199)).unwrap());
    }

    #[test]
    fn ended_runs_fail_quietly_but_holes_are_errors() {
        let mut r = run(1, 40, 60, 100, 300);
        r.checkpoints[SEP20] = None;
        r.duration = 200;
        assert!(!SelectionCriteria::default().stage1(&r).unwrap());
        r.duration = 400;
        assert!(matches!(SelectionCriteria::default().stage1(&r), Err(Error::MissingCheckpoint(_))));
    }

    #[test]
    fn summary_closed_form() {
        let mut a = run(1, 40, 60, 100, 300);
        let mut b = a;
        a.cum_symptomatic = 100;
        b.cum_symptomatic = 300;
        let t = summarize(&[a, b], StdKind::Sample).unwrap();
        let c = column(&t, "end_sym").unwrap();
        assert_eq!(c.mean, 200.0);
        assert!((c.std - 141.421_356_237_309_5).abs() < 1e-9);
        let one = summarize(&[a], StdKind::Sample).unwrap();
        let c = column(&one, "end_sym").unwrap();
        assert!(c.single);
        assert_eq!(c.std, 0.0);
        assert_eq!(summarize(&[], StdKind::Sample), Err(Error::EmptySubset));
    }

    #[test]
    fn run_seeds_count_up_from_the_base() {
        assert_eq!(run_seed(7, 0), 7);
        assert_eq!(run_seed(7, 299), 306);
        assert_eq!(run_seed(u64::MAX, 1), 0);
    }

    #[test]
    fn column_layout() {
        let t = summarize(&[run(1, 40, 60, 100, 300)], StdKind::Population).unwrap();
        let names: Vec<&str> = t.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names.len(), 13);
        assert_eq!(names[0], "jun1_sym");
        assert_eq!(names[5], "dec15_total");
        assert_eq!(names[12], "days");
    }
}
