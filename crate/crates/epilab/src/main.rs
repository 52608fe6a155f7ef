use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use epilab::config::LabConfig;
use epilab::manifest::OutputDir;
use epilab::{cases, formats, runner};
use epilab_core::batch::{column, select_second_wave, summarize, RunSummary, StdKind, DEC15};
use epilab_core::engine::run_epidemic;
use epilab_core::rt::{self, InfectivityProfile, RtEstimate};
use epilab_core::script::{parse_script, Scenario, Schedule};
use epilab_core::vaccine::{ga_optimize, CampaignEvaluator, QuotaTable, SpreadHypothesis};
use epilab_core::viz::{emit_heatmap, emit_sequence, line_plot_svg, Line, SequenceStyle};
use epilab_core::world::build_world;

#[derive(Parser)]
#[command(name = "epilab", version, about = "Agent-based epidemic laboratory")]
struct Cli {
    /// TOML configuration; every section is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root of the output tree.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, env = runner::WORKERS_ENV)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Bundled scenario name.
    #[arg(long, default_value = "baseline_appendix1")]
    scenario: String,
    /// Intervention script replacing the bundled schedule.
    #[arg(long)]
    script: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// One replication with its event log and daily counts.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        seed: u64,
        /// Also dump the built world.
        #[arg(long)]
        world: bool,
    },
    /// A batch of replications, with statistics and a heat map.
    Batch {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Second-wave selection, optionally replaying the selected seeds under other scenarios.
    Select {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Comma-separated scenarios replayed on the stage-2 seeds.
        #[arg(long, value_delimiter = ',')]
        arms: Vec<String>,
    },
    /// Heat map of duration against total infected from a batch CSV.
    Heatmap {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Contagion-sequence drawing of one replication or of an event log.
    Sequence {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, required_unless_present = "input")]
        seed: Option<u64>,
        /// Event log written by `run`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        limit: usize,
    },
    /// Reproduction number from a case file.
    Rt {
        #[arg(long)]
        input: PathBuf,
        /// Region to keep from a multi-region file.
        #[arg(long)]
        region: Option<String>,
        #[arg(long, value_enum, default_value_t = Method::DeseasonedMcmc)]
        method: Method,
        /// Window of the windowed estimator, in days.
        #[arg(long, default_value_t = 14)]
        tau: usize,
        /// Penalty of the smoothed estimator.
        #[arg(long, default_value_t = rt::DEFAULT_SMOOTHING)]
        alpha: f64,
    },
    /// Vaccination campaign on one scenario replication.
    Vaccinate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        strategy: Strategy,
        /// Quota table for `--strategy table`.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Seed of the replication to vaccinate; further seeds are averaged by the optimizer.
        #[arg(long = "scenario-seed", value_delimiter = ',', required_unless_present = "search_from")]
        scenario_seed: Vec<u64>,
        /// Look for a suitable replication starting from this seed instead.
        #[arg(long = "search-from", conflicts_with = "scenario_seed")]
        search_from: Option<u64>,
        #[arg(long, value_enum, default_value_t = Spread::Full)]
        spread: Spread,
    },
    /// Economic ledgers of the closure scenarios.
    Econ {
        #[arg(long, default_value_t = 3)]
        months: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Naive,
    Windowed,
    Smoothed,
    DeseasonedMcmc,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Strategy {
    Plain,
    Wise,
    GaPublished,
    Table,
    Ga,
}

#[derive(Clone, Copy, ValueEnum)]
enum Spread {
    Full,
    Half,
    None,
}

impl From<Spread> for SpreadHypothesis {
    fn from(s: Spread) -> Self {
        match s {
            Spread::Full => SpreadHypothesis::Full,
            Spread::Half => SpreadHypothesis::Half,
            Spread::None => SpreadHypothesis::None,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

/// Schedule and the name used for the output directory.
fn schedule_of(args: &ScenarioArgs) -> Result<(String, Schedule)> {
    if let Some(path) = &args.script {
        let schedule = parse_script(&read(path)?)?;
        return Ok((stem(path), schedule));
    }
    let scenario = Scenario::parse(&args.scenario)
        .with_context(|| format!("unknown scenario {:?}", args.scenario))?;
    Ok((scenario.name().into(), scenario.schedule()))
}

fn warn_schedule(schedule: &Schedule) {
    for w in &schedule.warnings {
        eprintln!("warning: {w}");
    }
}

struct Ctx {
    cfg: LabConfig,
    out: PathBuf,
    workers: usize,
}

impl Ctx {
    fn dir(&self, sub: &str, name: &str, schedule: &Schedule) -> Result<OutputDir> {
        Ok(OutputDir::create(&self.out, sub, name, &runner::config_hash(&self.cfg, schedule))?)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(p) => LabConfig::load(p)?,
        None => LabConfig::default(),
    };
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        bail!("worker count must be positive");
    }
    let ctx = Ctx { cfg, out: cli.out, workers };
    match cli.command {
        Command::Run { scenario, seed, world } => run(&ctx, &scenario, seed, world),
        Command::Batch { scenario, n, seed, bins } => batch(&ctx, &scenario, n, seed, bins),
        Command::Select { scenario, n, seed, arms } => select(&ctx, &scenario, n, seed, &arms),
        Command::Heatmap { input, bins } => heatmap(&ctx, &input, bins),
        Command::Sequence { scenario, seed, input, limit } => sequence(&ctx, &scenario, seed, input.as_deref(), limit),
        Command::Rt { input, region, method, tau, alpha } => rt_cmd(&ctx, &input, region.as_deref(), method, tau, alpha),
        Command::Vaccinate { scenario, strategy, table, scenario_seed, search_from, spread } => {
            vaccinate(&ctx, &scenario, strategy, table.as_deref(), &scenario_seed, search_from, spread)
        }
        Command::Econ { months } => econ(&ctx, months),
    }
}

fn run(ctx: &Ctx, args: &ScenarioArgs, seed: u64, dump_world: bool) -> Result<()> {
    let (name, schedule) = schedule_of(args)?;
    warn_schedule(&schedule);
    let mut world = build_world(&ctx.cfg.world, seed)?;
    world.set_base_params(ctx.cfg.params.clone())?;
    let mut out = ctx.dir("run", &name, &schedule)?;
    out.input("seed", seed);
    if dump_world {
        out.write("world.txt", &formats::world_dump(&world))?;
    }
    let record = run_epidemic(&mut world, &schedule, &ctx.cfg.stop);
    out.write("events.log", &formats::event_log(&record))?;
    out.write("daily.csv", &formats::daily_csv(&record)?)?;
    println!(
        "seed {seed}: {} days, {} symptomatic, {} infected, {} deceased",
        record.duration, record.cum_symptomatic, record.cum_total, record.deceased
    );
    out.finish()?;
    Ok(())
}

fn batch(ctx: &Ctx, args: &ScenarioArgs, n: usize, seed: u64, bins: usize) -> Result<()> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let (name, schedule) = schedule_of(args)?;
    warn_schedule(&schedule);
    let record = runner::run_batch(&ctx.cfg, &schedule, &name, seed, n, ctx.workers)?;
    let mut out = ctx.dir("batch", &name, &schedule)?;
    out.input("seed", seed).input("n", n);
    out.write("batch.csv", &formats::batch_csv(&record.runs)?)?;
    let stats = summarize(&record.runs, ctx.cfg.std)?;
    out.write("stats.csv", &formats::stats_csv(&stats)?)?;
    let (grid, svg) = emit_heatmap(&record.runs, bins, bins)?;
    out.write("heatmap.svg", &svg)?;
    out.write("heatgrid.csv", &formats::heatgrid_csv(&grid)?)?;
    for col in ["end_sym", "end_total", "days"] {
        if let Some(c) = column(&stats, col) {
            println!("{col}: mean {:.2} std {:.2}", c.mean, c.std);
        }
    }
    out.finish()?;
    Ok(())
}

fn print_dec15(label: &str, runs: &[RunSummary], kind: StdKind) -> Result<()> {
    let stats = summarize(runs, kind)?;
    let c = column(&stats, "dec15_sym").context("missing dec15 column")?;
    println!("{label}: {} runs, dec15 symptomatic mean {:.1} std {:.1}", runs.len(), c.mean, c.std);
    Ok(())
}

fn select(ctx: &Ctx, args: &ScenarioArgs, n: usize, seed: u64, arms: &[String]) -> Result<()> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let (name, schedule) = schedule_of(args)?;
    warn_schedule(&schedule);
    let record = runner::run_batch(&ctx.cfg, &schedule, &name, seed, n, ctx.workers)?;
    let picked = select_second_wave(&record.runs, &ctx.cfg.selection)?;
    let mut out = ctx.dir("select", &name, &schedule)?;
    out.input("seed", seed).input("n", n).input("arms", arms.join(","));
    out.write("batch.csv", &formats::batch_csv(&record.runs)?)?;
    out.write("stage1.csv", &formats::batch_csv(&picked.stage1)?)?;
    out.write("stage2.csv", &formats::batch_csv(&picked.stage2)?)?;
    println!(
        "stage 1: {} of {n} ({:.1}%), stage 2: {} ({:.1}% of stage 1)",
        picked.stage1.len(),
        100.0 * picked.stage1.len() as f64 / n as f64,
        picked.stage2.len(),
        if picked.stage1.is_empty() { 0.0 } else { 100.0 * picked.stage2.len() as f64 / picked.stage1.len() as f64 }
    );
    for (label, runs) in [("stage1", &picked.stage1), ("stage2", &picked.stage2)] {
        if !runs.is_empty() {
            out.write(&format!("stats_{label}.csv"), &formats::stats_csv(&summarize(runs, ctx.cfg.std)?)?)?;
        }
    }
    if !arms.is_empty() {
        if picked.stage2.is_empty() {
            bail!("no stage-2 run to replay");
        }
        print_dec15(&name, &picked.stage2, ctx.cfg.std)?;
        let seeds: Vec<u64> = picked.stage2.iter().map(|r| r.seed).collect();
        for arm in arms {
            let scenario = Scenario::parse(arm).with_context(|| format!("unknown arm {arm:?}"))?;
            let runs = runner::run_seeds(&ctx.cfg, &scenario.schedule(), &seeds, ctx.workers)?;
            out.write(&format!("arm_{}.csv", scenario.name()), &formats::batch_csv(&runs)?)?;
            out.write(&format!("stats_arm_{}.csv", scenario.name()), &formats::stats_csv(&summarize(&runs, ctx.cfg.std)?)?)?;
            print_dec15(scenario.name(), &runs, ctx.cfg.std)?;
        }
    }
    out.finish()?;
    Ok(())
}

fn heatmap(ctx: &Ctx, input: &Path, bins: usize) -> Result<()> {
    let runs = formats::parse_batch_csv(&read(input)?)?;
    let (grid, svg) = emit_heatmap(&runs, bins, bins)?;
    let mut out = ctx.dir("heatmap", &stem(input), &Schedule::default())?;
    out.input("input", input.display()).input("bins", bins);
    out.write("heatmap.svg", &svg)?;
    out.write("heatgrid.csv", &formats::heatgrid_csv(&grid)?)?;
    out.finish()?;
    Ok(())
}

fn sequence(ctx: &Ctx, args: &ScenarioArgs, seed: Option<u64>, input: Option<&Path>, limit: usize) -> Result<()> {
    let style = SequenceStyle::default();
    let (name, schedule, events) = match (input, seed) {
        (Some(path), _) => (stem(path), Schedule::default(), formats::parse_event_log(&read(path)?)?),
        (None, Some(seed)) => {
            let (name, schedule) = schedule_of(args)?;
            let mut world = build_world(&ctx.cfg.world, seed)?;
            world.set_base_params(ctx.cfg.params.clone())?;
            let record = run_epidemic(&mut world, &schedule, &ctx.cfg.stop);
            (name, schedule, record.events)
        }
        (None, None) => bail!("either --seed or --input is needed"),
    };
    let svg = emit_sequence(&events, Some(limit), &style)?;
    let mut out = ctx.dir("sequence", &name, &schedule)?;
    if let Some(seed) = seed {
        out.input("seed", seed);
    }
    out.input("limit", limit);
    out.write("sequence.svg", &svg)?;
    out.finish()?;
    Ok(())
}

fn rt_cmd(ctx: &Ctx, input: &Path, region: Option<&str>, method: Method, tau: usize, alpha: f64) -> Result<()> {
    let series = cases::read_cases(&read(input)?, region)?;
    if !series.filled.is_empty() {
        eprintln!("warning: {} missing days filled with zero", series.filled.len());
    }
    let profile = InfectivityProfile::default();
    let est: RtEstimate = match method {
        Method::Naive => rt::naive_rt(&series.counts, &profile)?,
        Method::Windowed => rt::windowed_rt(&series.counts, &profile, tau)?,
        Method::Smoothed => rt::smoothed_rt(&series.counts, &profile, alpha)?,
        Method::DeseasonedMcmc => {
            let dec = rt::rsvd_deseason(&series.counts, &ctx.cfg.rsvd)?;
            rt::mcmc_rt(&dec, &profile, &ctx.cfg.mcmc)?.estimate
        }
    };
    let method_name = Method::to_possible_value(&method).map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut out = ctx.dir("rt", &stem(input), &Schedule::default())?;
    out.input("input", input.display()).input("method", &method_name);
    if let Some(r) = region {
        out.input("region", r);
    }
    out.write("rt.csv", &formats::rt_csv(&series, &est)?)?;
    let mut lines = vec![Line { label: "rt", color: "black", dash: None, values: &est.point }];
    if let (Some(lo), Some(hi)) = (&est.lower, &est.upper) {
        lines.push(Line { label: "lo", color: "gray", dash: Some("4,3"), values: lo });
        lines.push(Line { label: "hi", color: "gray", dash: Some("4,3"), values: hi });
    }
    out.write("rt.svg", &line_plot_svg(&lines, Some(1.0))?)?;
    out.finish()?;
    Ok(())
}

fn strategy_name(s: Strategy) -> String {
    s.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn vaccinate(
    ctx: &Ctx,
    args: &ScenarioArgs,
    strategy: Strategy,
    table_path: Option<&Path>,
    seeds: &[u64],
    search_from: Option<u64>,
    spread: Spread,
) -> Result<()> {
    let (name, schedule) = schedule_of(args)?;
    warn_schedule(&schedule);
    let seeds: Vec<u64> = match search_from {
        Some(base) => {
            let pick = ctx.cfg.pick;
            let keep = move |r: &RunSummary| pick.matches(r);
            let found = runner::find_seeds(&ctx.cfg, &schedule, base, 1, 2000, ctx.workers, &keep)?;
            let Some(run) = found.first() else { bail!("no suitable replication among 2000 seeds from {base}") };
            println!("scenario seed {}", run.seed);
            vec![run.seed]
        }
        None => seeds.to_vec(),
    };
    let spread = SpreadHypothesis::from(spread).factor();
    let campaigns = runner::prepare_campaigns(&ctx.cfg, &schedule, &seeds, ctx.workers)?;
    let mut out = ctx.dir("vaccinate", &format!("{name}/{}", strategy_name(strategy)), &schedule)?;
    out.input("scenario_seed", seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
    out.input("spread", spread);
    let table = match strategy {
        Strategy::Plain => QuotaTable::plain(),
        Strategy::Wise => QuotaTable::wise(),
        Strategy::GaPublished => QuotaTable::ga_published(),
        Strategy::Table => {
            let Some(path) = table_path else { bail!("--strategy table needs --table") };
            QuotaTable::from_csv(&read(path)?)?
        }
        Strategy::Ga => {
            let template = QuotaTable::plain();
            let inner = CampaignEvaluator { campaigns: campaigns.clone(), template: template.clone(), spread };
            let eval = runner::ParallelEvaluator::new(inner, ctx.workers)?;
            let initial = [QuotaTable::plain().genome(), QuotaTable::wise().genome(), QuotaTable::ga_published().genome()];
            let rows = template.rows().len();
            let result = ga_optimize(rows, template.groups(), &initial, &eval, &ctx.cfg.ga)?;
            out.write("fitness_trace.csv", &formats::fitness_trace_csv(&result)?)?;
            println!("optimizer: best {:.1} after {} evaluations", result.best_fitness, result.evaluations);
            template.with_genome(&result.best)?
        }
    };
    out.write("quotas.csv", &table.to_csv())?;
    for (campaign, seed) in campaigns.iter().zip(&seeds) {
        let outcome = campaign.run(&table, spread)?;
        out.write(&format!("campaign_{seed}.csv"), &formats::campaign_csv(&outcome)?)?;
        let plain = campaign.run(&table.zero_budget(), spread)?;
        println!(
            "seed {seed}: {} symptomatic with vaccination, {} without, {} doses",
            outcome.record.cum_symptomatic,
            plain.record.cum_symptomatic,
            outcome.total_doses().iter().sum::<u32>()
        );
        if outcome.record.checkpoints[DEC15].is_none() {
            eprintln!("warning: seed {seed} ended before 2020-12-15");
        }
    }
    out.finish()?;
    Ok(())
}

fn econ(ctx: &Ctx, months: u32) -> Result<()> {
    let mut out = ctx.dir("econ", "closures", &Schedule::default())?;
    out.input("months", months);
    let table = epilab_core::econ::MultiplierTable::regional();
    for w in table.warnings() {
        eprintln!("warning: {w}");
    }
    out.write("econ.csv", &formats::econ_csv(months)?)?;
    let text = formats::econ_text(months);
    out.write("econ.txt", &text)?;
    print!("{text}");
    out.finish()?;
    Ok(())
}
