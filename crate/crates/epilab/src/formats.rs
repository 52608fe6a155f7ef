//! Plain-text and CSV encodings of worlds, runs, batches and reports.

use std::fmt::Write;

use epilab_core::batch::{ColumnStats, RunSummary};
use epilab_core::calendar::{day_to_date, CHECKPOINT_LABELS};
use epilab_core::econ::{published_three_months, scenario_ledger, total_loss, EconScenario};
use epilab_core::engine::{InfectionEvent, RunRecord, Snapshot};
use epilab_core::rt::{CaseSeries, RtEstimate};
use epilab_core::vaccine::{CampaignOutcome, GaResult};
use epilab_core::viz::HeatGrid;
use epilab_core::world::{AgentId, PlaceId, PlaceKind, World};

use crate::{Error, Result};

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| String::from("-"), |v| v.to_string())
}

fn ids<T: Copy>(v: &[T], f: impl Fn(T) -> u32) -> String {
    if v.is_empty() {
        return String::from("-");
    }
    v.iter().map(|x| f(*x).to_string()).collect::<Vec<_>>().join(",")
}

/// Canonical line-oriented dump of a freshly built world.
pub fn world_dump(world: &World) -> String {
    let mut out = String::from("# epilab world v1\n");
    let _ = writeln!(out, "world seed={} population={} places={}", world.seed, world.population(), world.places.len());
    for p in &world.places {
        let _ = writeln!(
            out,
            "place {} {} x={:.6} y={:.6} capacity={} rooms={} cluster={} members={}",
            p.id.0,
            p.kind.label(),
            p.position.x,
            p.position.y,
            p.capacity,
            p.rooms,
            p.cluster,
            ids(&p.members, |a| a.0)
        );
    }
    for a in &world.agents {
        let _ = writeln!(
            out,
            "agent {} {} {:?} exp={} home={} duty={} room={} ups={}",
            a.id.0,
            a.group.label(),
            a.role,
            a.fragility_exponent,
            a.home.0,
            opt(a.duty.map(|d| d.0)),
            a.room,
            ids(&a.usual_places, |p| p.0)
        );
    }
    out
}

const EVENT_COLUMNS: &str = "day infector infectee site place exponent symptomatic incubation_end infection_end";

/// Event log: a summary header, then one infection per line.
pub fn event_log(record: &RunRecord) -> String {
    let mut out = String::from("# epilab events v1\n");
    let _ = writeln!(
        out,
        "# seed={} duration={} truncated={} cum_symptomatic={} cum_total={} deceased={}",
        record.seed, record.duration, record.truncated, record.cum_symptomatic, record.cum_total, record.deceased
    );
    out.push_str(EVENT_COLUMNS);
    out.push('\n');
    for e in &record.events {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            e.day,
            opt(e.infector.map(|a| a.0)),
            e.infectee.0,
            e.site.map_or("-", PlaceKind::label),
            opt(e.place.map(|p| p.0)),
            e.infectee_exponent,
            e.symptomatic,
            e.incubation_end,
            e.infection_end
        );
    }
    out
}

/// Reads the events back from an event log.
pub fn parse_event_log(text: &str) -> Result<Vec<InfectionEvent>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("day ") {
            continue;
        }
        let err = |m: &str| Error::parse("event log", n + 1, m);
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 9 {
            return Err(err("expected 9 fields"));
        }
        let num = |s: &str| s.parse::<u32>().map_err(|_| err("bad number"));
        let maybe = |s: &str| if s == "-" { Ok(None) } else { num(s).map(Some) };
        let site = match f[3] {
            "-" => None,
            s => Some(PlaceKind::ALL.into_iter().find(|k| k.label() == s).ok_or_else(|| err("unknown site"))?),
        };
        out.push(InfectionEvent {
            day: num(f[0])?,
            infector: maybe(f[1])?.map(AgentId),
            infectee: AgentId(num(f[2])?),
            site,
            place: maybe(f[4])?.map(PlaceId),
            infectee_exponent: f[5].parse().map_err(|_| err("bad exponent"))?,
            symptomatic: f[6].parse().map_err(|_| err("bad flag"))?,
            incubation_end: num(f[7])?,
            infection_end: num(f[8])?,
        });
    }
    Ok(out)
}

fn to_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Daily series: day, new symptomatic, new asymptomatic, cumulative
/// symptomatic, cumulative total, deceased.
pub fn daily_csv(record: &RunRecord) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["day", "new_sym", "new_asym", "cum_sym", "cum_total", "deceased"])?;
    for r in &record.daily {
        w.serialize((r.day, r.new_symptomatic, r.new_asymptomatic, r.cum_symptomatic, r.cum_total, r.deceased))?;
    }
    to_string(w)
}

fn batch_header() -> Vec<String> {
    let mut h: Vec<String> = ["seed", "duration", "cum_sym", "cum_total"].map(String::from).to_vec();
    for label in CHECKPOINT_LABELS {
        h.push(format!("{label}_sym"));
        h.push(format!("{label}_total"));
    }
    h.push("deceased".into());
    h.push("truncated".into());
    h
}

/// One row per run; checkpoint cells are empty when the run ended earlier.
pub fn batch_csv(runs: &[RunSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(batch_header())?;
    for r in runs {
        let mut row = vec![r.seed.to_string(), r.duration.to_string(), r.cum_symptomatic.to_string(), r.cum_total.to_string()];
        for cp in &r.checkpoints {
            match cp {
                Some(s) => {
                    row.push(s.cum_symptomatic.to_string());
                    row.push(s.cum_total.to_string());
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        row.push(r.deceased.to_string());
        row.push(r.truncated.to_string());
        w.write_record(&row)?;
    }
    to_string(w)
}

pub fn parse_batch_csv(text: &str) -> Result<Vec<RunSummary>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    if header != batch_header() {
        return Err(Error::parse("batch csv", 1, "unexpected header"));
    }
    let mut out = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec?;
        let err = |m: &str| Error::parse("batch csv", n + 2, m);
        let int = |k: usize| rec[k].parse::<u64>().map_err(|_| err("bad number"));
        let int32 = |k: usize| int(k).and_then(|v| u32::try_from(v).map_err(|_| err("number out of range")));
        let mut checkpoints = [None; 5];
        for (c, slot) in checkpoints.iter_mut().enumerate() {
            let (a, b) = (4 + 2 * c, 5 + 2 * c);
            *slot = match (rec[a].is_empty(), rec[b].is_empty()) {
                (true, true) => None,
                (false, false) => Some(Snapshot { cum_symptomatic: int32(a)?, cum_total: int32(b)? }),
                _ => return Err(err("half-empty checkpoint")),
            };
        }
        out.push(RunSummary {
            seed: int(0)?,
            duration: int32(1)?,
            cum_symptomatic: int32(2)?,
            cum_total: int32(3)?,
            checkpoints,
            deceased: int32(14)?,
            truncated: rec[15].parse().map_err(|_| err("bad flag"))?,
        });
    }
    Ok(out)
}

/// Column statistics, one row per column of the checkpoint table.
pub fn stats_csv(table: &[ColumnStats]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["column", "count", "mean", "std", "single"])?;
    for c in table {
        w.serialize((&c.name, c.count, c.mean, c.std, c.single))?;
    }
    to_string(w)
}

/// Heat-grid cells by lower bin edges.
pub fn heatgrid_csv(grid: &HeatGrid) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x_low", "y_low", "count"])?;
    for y in 0..grid.ny() {
        for x in 0..grid.nx() {
            w.serialize((grid.x_edges[x], grid.y_edges[y], grid.count(x, y)))?;
        }
    }
    to_string(w)
}

/// Daily symptomatic series and cumulative first doses by group.
pub fn campaign_csv(out: &CampaignOutcome) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["day", "new_sym", "cum_sym", "doses", "g1", "g2", "g3", "g4", "g5", "g6", "g7"])?;
    for row in &out.record.daily {
        let (doses, vacc) = match row.day.checked_sub(out.start_day).map(|k| k as usize) {
            Some(k) if k < out.doses.len() => (out.doses[k], out.vaccinated[k]),
            Some(_) => (0, out.total_doses()),
            None => (0, [0; 7]),
        };
        let mut rec = vec![
            row.day.to_string(),
            row.new_symptomatic.to_string(),
            row.cum_symptomatic.to_string(),
            doses.to_string(),
        ];
        rec.extend(vacc.iter().map(u32::to_string));
        w.write_record(&rec)?;
    }
    to_string(w)
}

/// Best fitness per generation.
pub fn fitness_trace_csv(result: &GaResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["generation", "best_fitness"])?;
    for (g, f) in result.trace.iter().enumerate() {
        w.serialize((g, f))?;
    }
    to_string(w)
}

/// Rt estimate by date; missing values are empty cells.
pub fn rt_csv(series: &CaseSeries, est: &RtEstimate) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["date", "rt", "lo", "hi"])?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for i in 0..est.point.len() {
        let date = series.date(i);
        let lo = est.lower.as_ref().and_then(|l| l[i]);
        let hi = est.upper.as_ref().and_then(|u| u[i]);
        w.write_record([date.to_string(), cell(est.point[i]), cell(lo), cell(hi)])?;
    }
    to_string(w)
}

/// Calendar date of a simulation day, for reports.
pub fn day_label(day: u32) -> String {
    day_to_date(day).map(|d| d.to_string()).unwrap_or_else(|_| day.to_string())
}

/// Daily and monthly impacts plus the loss breakdown over `months`.
pub fn econ_csv(months: u32) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "item", "daily", "monthly_stored", "monthly_computed", "consistent"])?;
    for s in EconScenario::ALL {
        let l = scenario_ledger(s);
        let ok = l.consistent();
        let names = ["total_production", "added_value", "taxes"];
        for k in 0..3 {
            w.serialize((
                s.to_string(),
                names[k],
                l.daily.cells()[k],
                l.monthly_stored.cells()[k],
                round1(l.monthly_computed.cells()[k]),
                ok[k],
            ))?;
        }
    }
    w.write_record(["", "", "", "", "", ""])?;
    w.write_record(["scenario", "months", "health", "added_value", "taxes", "human_capital"])?;
    for s in EconScenario::ALL {
        let t = total_loss(s, months);
        w.serialize((s.to_string(), months, t.health, round1(t.added_value), round1(t.taxes), t.human_capital))?;
    }
    to_string(w)
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Human-readable ledger: Table-style daily/monthly impacts and losses.
pub fn econ_text(months: u32) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<22}{:>12}{:>12}{:>12}", "GDP points/1000", "A", "B", "C");
    let ledgers = EconScenario::ALL.map(scenario_ledger);
    let _ = writeln!(out, "daily impacts");
    for (k, name) in ["total production", "added value", "taxes"].iter().enumerate() {
        let _ = write!(out, "  {name:<20}");
        for l in &ledgers {
            let _ = write!(out, "{:>12.2}", l.daily.cells()[k]);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "monthly impacts (30 days)");
    for (k, name) in ["total production", "added value", "taxes"].iter().enumerate() {
        let _ = write!(out, "  {name:<20}");
        for l in &ledgers {
            let _ = write!(out, "{:>12.1}", l.monthly_computed.cells()[k]);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "losses over {months} months");
    let losses = EconScenario::ALL.map(|s| total_loss(s, months));
    let rows: [(&str, fn(&epilab_core::econ::TotalLoss) -> f64); 5] = [
        ("health expenditure", |t| t.health),
        ("added value", |t| t.added_value),
        ("taxes", |t| t.taxes),
        ("human capital", |t| t.human_capital),
        ("total", |t| t.total()),
    ];
    for (name, f) in rows {
        let _ = write!(out, "  {name:<20}");
        for t in &losses {
            let _ = write!(out, "{:>12.1}", f(t));
        }
        out.push('\n');
    }
    if months == 3 {
        let _ = write!(out, "  {:<20}", "published total");
        for s in EconScenario::ALL {
            let _ = write!(out, "{:>12.1}", published_three_months(s).1);
        }
        out.push('\n');
    }
    out
}
