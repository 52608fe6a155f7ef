use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Campaign, ConsultedMask, Genome, QuotaTable};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    /// Probability that a child mixes two parents gene by gene.
    pub crossover: f64,
    /// Probability that a live gene is perturbed.
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    /// Best individuals copied unchanged into the next generation.
    pub elitism: usize,
    /// When set, genes only take these values and a mutation jumps to
    /// another one of them.
    pub grid: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 30,
            tournament: 3,
            crossover: 0.7,
            mutation_rate: 0.2,
            mutation_sigma: 0.15,
            elitism: 2,
            grid: None,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::InvalidArgument(m));
        if self.population == 0 || self.generations == 0 {
            return bad(format!("population {} and generations {} must be positive", self.population, self.generations));
        }
        if self.tournament == 0 {
            return bad("tournament size must be positive".into());
        }
        if self.elitism > self.population {
            return bad(format!("elitism {} exceeds the population {}", self.elitism, self.population));
        }
        for (name, p) in [("crossover", self.crossover), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return bad(format!("mutation_sigma {} must be finite and non-negative", self.mutation_sigma));
        }
        if let Some(grid) = &self.grid {
            if grid.is_empty() || grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad("grid values must lie in [0, 1]".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    /// Genes the evaluation actually read; `None` when all of them matter.
    pub consulted: Option<ConsultedMask>,
}

/// Scores genomes; lower is better. Receives whole generations so that
/// implementations can spread the work.
pub trait Evaluator {
    fn evaluate(&self, genomes: &[Genome]) -> Result<Vec<Evaluation>>;
}

/// Cumulative symptomatic count of campaigns replayed on fixed scenarios,
/// averaged over the scenarios.
#[derive(Debug, Clone)]
pub struct CampaignEvaluator {
    pub campaigns: Vec<Campaign>,
    /// Supplies days and budgets; its quotas are replaced by each genome.
    pub template: QuotaTable,
    pub spread: f64,
}

impl CampaignEvaluator {
    pub fn evaluate_one(&self, genome: &Genome) -> Result<Evaluation> {
        if self.campaigns.is_empty() {
            return Err(Error::InvalidArgument("no scenario to evaluate on".into()));
        }
        let table = self.template.with_genome(genome)?;
        let mut sum = 0.0;
        let mut mask: Option<ConsultedMask> = None;
        for c in &self.campaigns {
            let out = c.run(&table, self.spread)?;
            sum += out.fitness();
            mask = Some(match mask {
                None => out.consulted,
                Some(m) => m.union(&out.consulted),
            });
        }
        Ok(Evaluation { fitness: sum / self.campaigns.len() as f64, consulted: mask })
    }
}

impl Evaluator for CampaignEvaluator {
    fn evaluate(&self, genomes: &[Genome]) -> Result<Vec<Evaluation>> {
        genomes.iter().map(|g| self.evaluate_one(g)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best: Genome,
    pub best_fitness: f64,
    pub best_consulted: Option<ConsultedMask>,
    /// Best fitness of the initial population, then after each generation.
    pub trace: Vec<f64>,
    /// Distinct genomes scored.
    pub evaluations: usize,
}

impl GaResult {
    /// The best quotas with the genes that never influenced the outcome blanked.
    pub fn report(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.best.rows)
            .map(|r| {
                (0..self.best.cols)
                    .map(|c| {
                        let live = self.best_consulted.as_ref().is_none_or(|m| m.get(r, c));
                        live.then(|| self.best.get(r, c))
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
struct Individual {
    genome: Genome,
    eval: Evaluation,
}

fn key(g: &Genome) -> Vec<u64> {
    g.genes.iter().map(|v| v.to_bits()).collect()
}

struct Scorer<'a> {
    evaluator: &'a dyn Evaluator,
    cache: BTreeMap<Vec<u64>, Evaluation>,
}

impl Scorer<'_> {
    fn score(&mut self, genomes: Vec<Genome>) -> Result<Vec<Individual>> {
        let mut fresh: Vec<Genome> = Vec::new();
        for g in &genomes {
            let k = key(g);
            if !self.cache.contains_key(&k) && !fresh.iter().any(|f| key(f) == k) {
                fresh.push(g.clone());
            }
        }
        if !fresh.is_empty() {
            let evals = self.evaluator.evaluate(&fresh)?;
            if evals.len() != fresh.len() {
                return Err(Error::Numerical(format!("{} evaluations for {} genomes", evals.len(), fresh.len())));
            }
            for (g, e) in fresh.iter().zip(evals) {
                if !e.fitness.is_finite() {
                    return Err(Error::Numerical(format!("fitness {}", e.fitness)));
                }
                self.cache.insert(key(g), e);
            }
        }
        Ok(genomes
            .into_iter()
            .map(|g| {
                let eval = self.cache[&key(&g)].clone();
                Individual { genome: g, eval }
            })
            .collect())
    }
}

fn random_gene(cfg: &GaConfig, rng: &mut ChaCha8Rng) -> f64 {
    match &cfg.grid {
        Some(grid) => grid[rng.random_range(0..grid.len())],
        None => rng.random::<f64>(),
    }
}

fn mutate_gene(v: f64, cfg: &GaConfig, normal: &Normal<f64>, rng: &mut ChaCha8Rng) -> f64 {
    match &cfg.grid {
        Some(grid) if grid.len() > 1 => loop {
            let w = grid[rng.random_range(0..grid.len())];
            if w != v {
                return w;
            }
        },
        Some(_) => v,
        None => (v + normal.sample(rng)).clamp(0.0, 1.0),
    }
}

fn tournament<'a>(pop: &'a [Individual], size: usize, rng: &mut ChaCha8Rng) -> &'a Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.eval.fitness < best.eval.fitness {
            best = c;
        }
    }
    best
}

fn rank(pop: &mut [Individual]) {
    pop.sort_by(|a, b| a.eval.fitness.total_cmp(&b.eval.fitness));
}

/// Minimizes the evaluator's fitness over `rows x cols` quota matrices.
/// `initial` genomes seed the first population; the rest is random.
pub fn ga_optimize(
    rows: usize,
    cols: usize,
    initial: &[Genome],
    evaluator: &dyn Evaluator,
    cfg: &GaConfig,
) -> Result<GaResult> {
    cfg.validate()?;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("empty genome shape".into()));
    }
    if let Some(g) = initial.iter().find(|g| g.rows != rows || g.cols != cols || g.genes.len() != rows * cols) {
        return Err(Error::InvalidArgument(format!("initial genome is {}x{}, expected {rows}x{cols}", g.rows, g.cols)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.mutation_sigma).map_err(|e| Error::InvalidArgument(format!("{e}")))?;
    let mut scorer = Scorer { evaluator, cache: BTreeMap::new() };

    let mut genomes: Vec<Genome> = initial.iter().take(cfg.population).cloned().collect();
    while genomes.len() < cfg.population {
        let genes = (0..rows * cols).map(|_| random_gene(cfg, &mut rng)).collect();
        genomes.push(Genome { rows, cols, genes });
    }
    let mut pop = scorer.score(genomes)?;
    rank(&mut pop);
    let mut trace = alloc::vec![pop[0].eval.fitness];

    for _ in 0..cfg.generations {
        let mut next: Vec<Genome> = pop.iter().take(cfg.elitism).map(|i| i.genome.clone()).collect();
        while next.len() < cfg.population {
            let a = tournament(&pop, cfg.tournament, &mut rng);
            let b = tournament(&pop, cfg.tournament, &mut rng);
            let mut child = a.genome.clone();
            if rng.random::<f64>() < cfg.crossover {
                for (c, &gb) in child.genes.iter_mut().zip(&b.genome.genes) {
                    if rng.random::<bool>() {
                        *c = gb;
                    }
                }
            }
            let live = match (&a.eval.consulted, &b.eval.consulted) {
                (Some(ma), Some(mb)) => Some(ma.union(mb)),
                _ => None,
            };
            for (k, gene) in child.genes.iter_mut().enumerate() {
                let is_live = live.as_ref().is_none_or(|m| m.flags[k]);
                if is_live && rng.random::<f64>() < cfg.mutation_rate {
                    *gene = mutate_gene(*gene, cfg, &normal, &mut rng);
                }
            }
            next.push(child);
        }
        pop = scorer.score(next)?;
        rank(&mut pop);
        trace.push(pop[0].eval.fitness);
    }

    let best = pop.swap_remove(0);
    Ok(GaResult {
        best: best.genome,
        best_fitness: best.eval.fitness,
        best_consulted: best.eval.consulted,
        trace,
        evaluations: scorer.cache.len(),
    })
}
