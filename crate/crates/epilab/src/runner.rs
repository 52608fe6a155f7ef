//! Parallel execution on a rayon pool.
//!
//! Work items are indexed and collected back in index order, so results do
//! not depend on the number of workers or on completion order.

use rayon::prelude::*;
use rayon::ThreadPool;

use epilab_core::batch::{run_seed, run_single, BatchRecord, RunSummary};
use epilab_core::engine::RunRecord;
use epilab_core::script::Schedule;
use epilab_core::vaccine::{Campaign, CampaignEvaluator, Evaluation, Evaluator, Genome};

use crate::config::LabConfig;
use crate::Result;

/// Worker count used when none is given.
pub const WORKERS_ENV: &str = "EPILAB_WORKERS";

pub fn pool(workers: usize) -> Result<ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?)
}

/// Identifies a configuration together with the schedule it runs.
pub fn config_hash(cfg: &LabConfig, schedule: &Schedule) -> String {
    cfg.hash(&schedule.to_script())
}

/// Full records of the given seeds, in the same order.
pub fn run_records(cfg: &LabConfig, schedule: &Schedule, seeds: &[u64], workers: usize) -> Result<Vec<RunRecord>> {
    pool(workers)?.install(|| {
        seeds.par_iter().map(|&seed| Ok(run_single(&cfg.world, &cfg.params, schedule, seed, &cfg.stop)?)).collect()
    })
}

/// Runs the given seeds and returns their summaries in the same order.
pub fn run_seeds(cfg: &LabConfig, schedule: &Schedule, seeds: &[u64], workers: usize) -> Result<Vec<RunSummary>> {
    pool(workers)?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let rec = run_single(&cfg.world, &cfg.params, schedule, seed, &cfg.stop)?;
                Ok(RunSummary::from(&rec))
            })
            .collect()
    })
}

/// `n` replications with seeds `run_seed(base_seed, 0..n)`.
pub fn run_batch(
    cfg: &LabConfig,
    schedule: &Schedule,
    scenario: &str,
    base_seed: u64,
    n: usize,
    workers: usize,
) -> Result<BatchRecord> {
    let seeds: Vec<u64> = (0..n as u64).map(|i| run_seed(base_seed, i)).collect();
    Ok(BatchRecord {
        scenario: scenario.into(),
        base_seed,
        config_hash: config_hash(cfg, schedule),
        runs: run_seeds(cfg, schedule, &seeds, workers)?,
    })
}

/// Scans seeds from `base_seed` upwards, `chunk` at a time, and returns the
/// first `wanted` whose run satisfies `keep`, in seed order. Gives up after
/// `max_tries` seeds.
pub fn find_seeds(
    cfg: &LabConfig,
    schedule: &Schedule,
    base_seed: u64,
    wanted: usize,
    max_tries: usize,
    workers: usize,
    keep: &(dyn Fn(&RunSummary) -> epilab_core::Result<bool> + Sync),
) -> Result<Vec<RunSummary>> {
    let chunk = 4 * workers.max(1);
    let mut found = Vec::new();
    let mut next = 0usize;
    while found.len() < wanted && next < max_tries {
        let end = (next + chunk).min(max_tries);
        let seeds: Vec<u64> = (next as u64..end as u64).map(|i| run_seed(base_seed, i)).collect();
        for run in run_seeds(cfg, schedule, &seeds, workers)? {
            if found.len() < wanted && keep(&run)? {
                found.push(run);
            }
        }
        next = end;
    }
    Ok(found)
}

/// Prepares one paused campaign per seed.
pub fn prepare_campaigns(cfg: &LabConfig, schedule: &Schedule, seeds: &[u64], workers: usize) -> Result<Vec<Campaign>> {
    pool(workers)?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| Ok(Campaign::prepare(&cfg.world, &cfg.params, schedule, seed, &cfg.stop)?))
            .collect()
    })
}

/// Scores each generation's genomes concurrently.
pub struct ParallelEvaluator {
    pub inner: CampaignEvaluator,
    pool: ThreadPool,
}

impl ParallelEvaluator {
    pub fn new(inner: CampaignEvaluator, workers: usize) -> Result<Self> {
        Ok(Self { inner, pool: pool(workers)? })
    }
}

impl Evaluator for ParallelEvaluator {
    fn evaluate(&self, genomes: &[Genome]) -> epilab_core::Result<Vec<Evaluation>> {
        self.pool.install(|| genomes.par_iter().map(|g| self.inner.evaluate_one(g)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use epilab_core::world::WorldConfig;

    fn small() -> LabConfig {
        LabConfig {
            world: WorldConfig {
                population: 435,
                census: [13, 8, 24, 156, 118, 26, 90],
                open_spaces: 40,
                ..WorldConfig::default()
            },
            ..LabConfig::default()
        }
    }

    #[test]
    fn batch_matches_single_runs_and_ignores_workers() {
        let cfg = small();
        let sched = Schedule::default();
        let a = run_batch(&cfg, &sched, "x", 11, 6, 1).unwrap();
        let b = run_batch(&cfg, &sched, "x", 11, 6, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.len(), 6);
        let one = run_single(&cfg.world, &cfg.params, &sched, 13, &cfg.stop).unwrap();
        assert_eq!(a.runs[2], RunSummary::from(&one));
    }

    #[test]
    fn seed_search_keeps_order() {
        let cfg = small();
        let sched = Schedule::default();
        let all = run_batch(&cfg, &sched, "x", 0, 12, 2).unwrap();
        let keep = |r: &RunSummary| Ok(r.cum_total % 2 == 0);
        let expect: Vec<_> = all.runs.iter().filter(|r| r.cum_total % 2 == 0).take(3).copied().collect();
        let got = find_seeds(&cfg, &sched, 0, 3, 12, 2, &keep).unwrap();
        assert_eq!(got, expect);
    }
}
