//! Daily movement, four-phase contagion and disease progression.

use alloc::vec::Vec;
use core::mem;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calendar;
use crate::params::EpidemicParams;
use crate::script::Schedule;
use crate::world::{Agent, AgentId, Group, Health, PlaceId, PlaceKind, Point, Role, World};

/// Multiplier applied to the base contagion probability of a receiver.
pub const INTRINSIC_SUSCEPTIBILITY_FACTOR: f64 = 5.0;

/// `5^e` for a fragility exponent `e`.
pub fn susceptibility_factor(exponent: i8) -> f64 {
    let mut p = 1.0;
    for _ in 0..exponent.unsigned_abs() {
        p *= INTRINSIC_SUSCEPTIBILITY_FACTOR;
    }
    if exponent < 0 { 1.0 / p } else { p }
}

pub fn intrinsic_susceptibility(group: Group) -> f64 {
    susceptibility_factor(group.fragility_exponent())
}

/// Probability that one exposure of `receiver` to `spreader` causes a contagion.
pub fn infection_probability(spreader: &Agent, receiver: &Agent, params: &EpidemicParams) -> f64 {
    let mut p = params.prob * susceptibility_factor(receiver.fragility_exponent);
    if matches!(spreader.disease.health, Health::Infected { symptomatic: false }) {
        p *= 1.0 + params.d_pct / 100.0;
    }
    if spreader.vaccination.dosed_on.is_some() {
        p *= params.vaccinated_spread;
    }
    p.clamp(0.0, 1.0)
}

fn bernoulli_pct(rng: &mut impl Rng, pct: f64) -> bool {
    if pct >= 100.0 {
        true
    } else if pct <= 0.0 {
        false
    } else {
        rng.random::<f64>() * 100.0 < pct
    }
}

/// Whether the free-time movement rules let the agent leave home today,
/// ignoring its occupation.
fn roams(agent: &Agent, params: &EpidemicParams, rng: &mut impl Rng) -> bool {
    if agent.disease.is_symptomatic() || agent.role == Role::NursingResident || agent.hospitalized_in.is_some() {
        return false;
    }
    if !params.lockdown || agent.role.is_care_operator() {
        return true;
    }
    bernoulli_pct(rng, params.pct_any_leaving)
        || (!agent.is_fragile() && bernoulli_pct(rng, params.pct_not_fragile_leaving))
}

/// Whether the agent goes to its workplace, classroom or care facility today.
fn goes_on_duty(agent: &Agent, params: &EpidemicParams, factory_open: bool, rng: &mut impl Rng) -> bool {
    if agent.disease.is_symptomatic() || agent.hospitalized_in.is_some() || agent.duty.is_none() {
        return false;
    }
    match agent.role {
        Role::NursingOperator | Role::HealthcareOperator => true,
        Role::Worker => factory_open && !(params.stop_fragile_workers && agent.is_fragile()),
        Role::Teacher => params.activate_schools,
        Role::Student => params.activate_schools && bernoulli_pct(rng, params.pct_students),
        Role::NursingResident | Role::Other => false,
    }
}

/// Whether a factory is open under the current limitations, given its
/// persistent draw in `[0, 1)`.
pub fn factory_is_open(open_draw: f64, params: &EpidemicParams) -> bool {
    !params.lockdown || open_draw * 100.0 < params.pct_open_factories
}

/// Movement rule: symptomatic agents stay put; otherwise movement is free
/// without limitations and subject to the listed exemptions under them.
pub fn may_move(agent: &Agent, params: &EpidemicParams, factory_open: bool, rng: &mut impl Rng) -> bool {
    if !agent.disease.is_alive() || agent.disease.is_symptomatic() {
        return false;
    }
    roams(agent, params, rng) || goes_on_duty(agent, params, factory_open, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfectionEvent {
    pub day: u32,
    pub infector: Option<AgentId>,
    pub infectee: AgentId,
    /// `None` for initial and imported cases.
    pub site: Option<PlaceKind>,
    pub place: Option<PlaceId>,
    pub infectee_exponent: i8,
    pub symptomatic: bool,
    pub incubation_end: u32,
    pub infection_end: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Night,
    Stable,
    Visit,
    Open,
}

/// One agent present outside its home during a contagion phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Movement {
    pub day: u32,
    pub agent: AgentId,
    pub place: PlaceId,
    pub phase: Phase,
}

/// Index into a 7-slot per-site array; slot 0 is the unknown place.
pub fn site_index(site: Option<PlaceKind>) -> usize {
    match site {
        None => 0,
        Some(kind) => 1 + kind as usize,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tallies {
    pub susceptible: u32,
    pub incubating: u32,
    pub symptomatic: u32,
    pub asymptomatic: u32,
    pub recovered: u32,
    pub deceased: u32,
}

impl Tallies {
    pub fn total(&self) -> u32 {
        self.susceptible + self.incubating + self.symptomatic + self.asymptomatic + self.recovered + self.deceased
    }

    pub fn of(world: &World) -> Tallies {
        let mut t = Tallies::default();
        for a in &world.agents {
            match a.disease.health {
                Health::Susceptible => t.susceptible += 1,
                Health::Incubating => t.incubating += 1,
                Health::Infected { symptomatic: true } => t.symptomatic += 1,
                Health::Infected { symptomatic: false } => t.asymptomatic += 1,
                Health::Recovered { .. } => t.recovered += 1,
                Health::Deceased => t.deceased += 1,
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayReport {
    pub day: u32,
    pub new_infections: u32,
    /// New contagions by place, indexed by [`site_index`].
    pub by_site: [u32; 7],
    pub new_symptomatic: u32,
    pub new_asymptomatic: u32,
    pub tallies: Tallies,
    pub cum_symptomatic: u32,
    pub cum_infected: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct Counters {
    pub cum_symptomatic: u32,
    pub cum_infected: u32,
    pub deceased: u32,
    pub active: u32,
    pub new_symptomatic: u32,
    pub new_asymptomatic: u32,
    pub new_infections: u32,
    pub by_site: [u32; 7],
}

/// Per-day buffers reused across steps.
#[derive(Debug, Clone, Default)]
pub(crate) struct Scratch {
    roams: Vec<bool>,
    on_duty: Vec<bool>,
    entries: Vec<(u32, u32, bool)>,
    offsets: Vec<u32>,
    order: Vec<(u32, bool)>,
    positions: Vec<Point>,
    cursor: Vec<u32>,
    hot: Vec<u32>,
    state: Vec<u8>,
}

const NO_EVENT: u32 = u32::MAX;

fn record_event(world: &mut World, event: InfectionEvent) -> u32 {
    world.events.push(event);
    (world.events.len() - 1) as u32
}

fn draw_duration(params: &EpidemicParams, rng: &mut ChaCha8Rng) -> u32 {
    rng.random_range(params.duration_min..=params.duration_max)
}

fn asymptomatic_pct(agent: &Agent, params: &EpidemicParams) -> f64 {
    if agent.is_fragile() { params.asym_fragile_pct } else { params.asym_regular_pct }
}

/// Clinical outcome at the end of incubation.
fn draw_symptomatic(agent: &Agent, params: &EpidemicParams, day: u32, rng: &mut ChaCha8Rng) -> bool {
    if agent.vaccination.is_effective(day) {
        return false;
    }
    !bernoulli_pct(rng, asymptomatic_pct(agent, params))
}

fn on_symptomatic(world: &mut World, i: usize) {
    world.counters.cum_symptomatic += 1;
    world.counters.new_symptomatic += 1;
    let agent = &world.agents[i];
    if world.places[agent.home.index()].kind != PlaceKind::House {
        return;
    }
    let hospital_pct = world.params.hospital_pct;
    if !bernoulli_pct(&mut world.rng, hospital_pct) {
        return;
    }
    let hospitals = world.places.iter().filter(|p| p.kind == PlaceKind::Hospital).count();
    if hospitals == 0 {
        return;
    }
    let k = world.rng.random_range(0..hospitals);
    let h = world.places.iter().filter(|p| p.kind == PlaceKind::Hospital).nth(k).map(|p| p.id);
    world.agents[i].hospitalized_in = h;
}

/// Infects agent `id` with a case from outside: no known infector or place,
/// and no incubation.
pub fn infect_from_outside(world: &mut World, id: AgentId) {
    let i = id.index();
    debug_assert_eq!(world.agents[i].disease.health, Health::Susceptible);
    let day = world.day;
    let duration = draw_duration(&world.params, &mut world.rng);
    let symptomatic = draw_symptomatic(&world.agents[i], &world.params, day, &mut world.rng);
    let event = record_event(
        world,
        InfectionEvent {
            day,
            infector: None,
            infectee: id,
            site: None,
            place: None,
            infectee_exponent: world.agents[i].fragility_exponent,
            symptomatic,
            incubation_end: day,
            infection_end: day + duration,
        },
    );
    let d = &mut world.agents[i].disease;
    d.health = Health::Infected { symptomatic };
    d.infected_on = day;
    d.incubation_end = day;
    d.infection_end = day + duration;
    d.site = None;
    d.infector = None;
    d.event = event;
    world.counters.cum_infected += 1;
    world.counters.active += 1;
    world.counters.new_infections += 1;
    world.counters.by_site[0] += 1;
    if symptomatic {
        on_symptomatic(world, i);
    } else {
        world.counters.new_asymptomatic += 1;
    }
}

fn infect(world: &mut World, receiver: usize, spreader: usize, place: PlaceId) {
    let day = world.day;
    let kind = world.places[place.index()].kind;
    let duration = draw_duration(&world.params, &mut world.rng);
    let incubation_end = day + world.params.incubation_days;
    let event = record_event(
        world,
        InfectionEvent {
            day,
            infector: Some(AgentId(spreader as u32)),
            infectee: AgentId(receiver as u32),
            site: Some(kind),
            place: Some(place),
            infectee_exponent: world.agents[receiver].fragility_exponent,
            symptomatic: false,
            incubation_end,
            infection_end: day + duration,
        },
    );
    let d = &mut world.agents[receiver].disease;
    d.health = Health::Incubating;
    d.infected_on = day;
    d.incubation_end = incubation_end;
    d.infection_end = day + duration;
    d.site = Some(kind);
    d.infector = Some(AgentId(spreader as u32));
    d.event = event;
    world.counters.cum_infected += 1;
    world.counters.active += 1;
    world.counters.new_infections += 1;
    world.counters.by_site[site_index(Some(kind))] += 1;
}

#[inline]
fn can_catch(agent: &Agent, day: u32) -> bool {
    agent.disease.health == Health::Susceptible && !agent.vaccination.is_effective(day)
}

fn try_infect(world: &mut World, spreader: usize, receiver: usize, place: PlaceId) -> bool {
    let p = infection_probability(&world.agents[spreader], &world.agents[receiver], &world.params);
    if p > 0.0 && world.rng.random::<f64>() < p {
        infect(world, receiver, spreader, place);
        true
    } else {
        false
    }
}

/// Groups the staged `(place, agent, flag)` entries by place and lists the
/// places hosting at least one infectious agent.
fn bucket(scratch: &mut Scratch, n_places: usize) {
    scratch.offsets.clear();
    scratch.offsets.resize(n_places + 1, 0);
    scratch.hot.clear();
    for &(p, a, _) in &scratch.entries {
        scratch.offsets[p as usize + 1] += 1;
        if scratch.state[a as usize] == INFECTIOUS {
            scratch.hot.push(p);
        }
    }
    scratch.hot.sort_unstable();
    scratch.hot.dedup();
    for k in 0..n_places {
        scratch.offsets[k + 1] += scratch.offsets[k];
    }
    scratch.cursor.clear();
    scratch.cursor.extend_from_slice(&scratch.offsets[..n_places]);
    scratch.order.clear();
    scratch.order.resize(scratch.entries.len(), (0, false));
    for &(p, a, f) in &scratch.entries {
        let c = &mut scratch.cursor[p as usize];
        scratch.order[*c as usize] = (a, f);
        *c += 1;
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum PairRule {
    /// Every pair sharing the place.
    Room,
    /// Pairs in the same room of the place, or involving a flagged member of a
    /// care facility.
    Stable,
    /// Pairs within the contagion radius involving at least one visitor.
    VisitRadius,
    /// Pairs within the contagion radius.
    Radius,
}

const OTHER: u8 = 0;
const INFECTIOUS: u8 = 1;
const CATCHABLE: u8 = 2;

fn bucket_has_pair(state: &[u8], members: &[(u32, bool)]) -> bool {
    let mut seen = 0u8;
    for &(a, _) in members {
        seen |= state[a as usize];
        if seen == INFECTIOUS | CATCHABLE {
            return true;
        }
    }
    false
}

/// Uniform point in the disk of radius `spread` around `center`.
fn jitter(center: Point, spread: f64, rng: &mut ChaCha8Rng) -> Point {
    loop {
        let x = 2.0 * rng.random::<f64>() - 1.0;
        let y = 2.0 * rng.random::<f64>() - 1.0;
        if x * x + y * y <= 1.0 {
            return Point { x: center.x + spread * x, y: center.y + spread * y };
        }
    }
}

/// Index in `0..n` for small `n`; the multiply-shift bias is below `n / 2^32`.
#[inline]
fn pick_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    ((u64::from(rng.next_u32()) * n as u64) >> 32) as usize
}

fn run_buckets(world: &mut World, scratch: &mut Scratch, rule: PairRule) {
    let r2 = world.params.radius * world.params.radius;
    let radial = matches!(rule, PairRule::VisitRadius | PairRule::Radius);
    for h in 0..scratch.hot.len() {
        let p = scratch.hot[h] as usize;
        let (s, e) = (scratch.offsets[p] as usize, scratch.offsets[p + 1] as usize);
        if e - s < 2 || !bucket_has_pair(&scratch.state, &scratch.order[s..e]) {
            continue;
        }
        if rule == PairRule::VisitRadius && !scratch.order[s..e].iter().any(|m| m.1) {
            continue;
        }
        let place = world.places[p].id;
        let kind = world.places[p].kind;
        if radial {
            let spread = match kind {
                PlaceKind::House => world.config.spread.house,
                PlaceKind::OpenSpace => world.config.spread.open_space,
                _ => world.config.spread.building,
            };
            let center = world.places[p].position;
            scratch.positions.clear();
            for _ in s..e {
                let pt = jitter(center, spread, &mut world.rng);
                scratch.positions.push(pt);
            }
        }
        for a in s..e {
            let (i, fi) = scratch.order[a];
            let i = i as usize;
            if scratch.state[i] != INFECTIOUS {
                continue;
            }
            for b in s..e {
                let (j, fj) = scratch.order[b];
                let j = j as usize;
                if scratch.state[j] != CATCHABLE {
                    continue;
                }
                let admitted = match rule {
                    PairRule::Room => true,
                    PairRule::Stable => match kind {
                        PlaceKind::Factory => world.agents[i].room == world.agents[j].room,
                        PlaceKind::Hospital | PlaceKind::NursingHome => fi || fj,
                        _ => true,
                    },
                    PairRule::VisitRadius => {
                        (fi || fj) && scratch.positions[a - s].dist2(scratch.positions[b - s]) <= r2
                    }
                    PairRule::Radius => scratch.positions[a - s].dist2(scratch.positions[b - s]) <= r2,
                };
                if admitted && try_infect(world, i, j, place) {
                    scratch.state[j] = OTHER;
                }
            }
        }
    }
}

fn log_moves(world: &mut World, scratch: &Scratch, phase: Phase, only_flagged: bool) {
    let day = world.day;
    if let Some(log) = world.movement_log.as_mut() {
        for &(p, a, f) in &scratch.entries {
            if !only_flagged || f {
                log.push(Movement { day, agent: AgentId(a), place: PlaceId(p), phase });
            }
        }
    }
}

fn import_cases(world: &mut World) {
    let n = mem::take(&mut world.pending_imports) as usize;
    if n == 0 {
        return;
    }
    let day = world.day;
    let eligible: Vec<AgentId> = world
        .agents
        .iter()
        .filter(|a| {
            can_catch(a, day)
                && a.hospitalized_in.is_none()
                && !matches!(a.role, Role::NursingResident | Role::NursingOperator | Role::HealthcareOperator)
        })
        .map(|a| a.id)
        .collect();
    let n = n.min(eligible.len());
    let picks = rand::seq::index::sample(&mut world.rng, eligible.len(), n);
    for k in picks.iter() {
        infect_from_outside(world, eligible[k]);
    }
}

fn progress(world: &mut World) {
    let day = world.day;
    for i in 0..world.agents.len() {
        match world.agents[i].disease.health {
            Health::Incubating if day >= world.agents[i].disease.incubation_end => {
                let symptomatic = draw_symptomatic(&world.agents[i], &world.params, day, &mut world.rng);
                world.agents[i].disease.health = Health::Infected { symptomatic };
                let ev = world.agents[i].disease.event;
                if ev != NO_EVENT {
                    world.events[ev as usize].symptomatic = symptomatic;
                }
                if symptomatic {
                    on_symptomatic(world, i);
                } else {
                    world.counters.new_asymptomatic += 1;
                }
            }
            _ => {}
        }
        if let Health::Infected { symptomatic } = world.agents[i].disease.health {
            if symptomatic {
                let p = world.params.cfr_daily * susceptibility_factor(world.agents[i].fragility_exponent);
                if p > 0.0 && world.rng.random::<f64>() < p {
                    let a = &mut world.agents[i];
                    a.disease.health = Health::Deceased;
                    a.disease.infection_end = day;
                    a.hospitalized_in = None;
                    let ev = a.disease.event;
                    if ev != NO_EVENT {
                        world.events[ev as usize].infection_end = day;
                    }
                    world.counters.deceased += 1;
                    world.counters.active -= 1;
                    continue;
                }
            }
            if day >= world.agents[i].disease.infection_end {
                let a = &mut world.agents[i];
                a.disease.health = Health::Recovered { was_symptomatic: symptomatic };
                a.hospitalized_in = None;
                world.counters.active -= 1;
            }
        }
    }
}

/// Simulates the next day with the parameters currently in `world.params`.
pub fn step_day(world: &mut World) -> DayReport {
    world.day += 1;
    let day = world.day;
    let c = &mut world.counters;
    c.new_symptomatic = 0;
    c.new_asymptomatic = 0;
    c.new_infections = 0;
    c.by_site = [0; 7];
    import_cases(world);

    let mut scratch = mem::take(&mut world.scratch);
    let n = world.agents.len();
    let n_places = world.places.len();

    scratch.state.clear();
    scratch.state.extend(world.agents.iter().map(|a| {
        if a.disease.is_infectious() {
            INFECTIOUS
        } else if can_catch(a, day) {
            CATCHABLE
        } else {
            OTHER
        }
    }));

    // Daily movement decisions.
    scratch.roams.clear();
    scratch.on_duty.clear();
    for i in 0..n {
        let agent = &world.agents[i];
        if !agent.disease.is_alive() {
            scratch.roams.push(false);
            scratch.on_duty.push(false);
            continue;
        }
        let factory_open = match (agent.role, agent.duty) {
            (Role::Worker, Some(f)) => factory_is_open(world.places[f.index()].open_draw, &world.params),
            _ => false,
        };
        let r = roams(agent, &world.params, &mut world.rng);
        let d = goes_on_duty(agent, &world.params, factory_open, &mut world.rng);
        scratch.roams.push(r);
        scratch.on_duty.push(d);
    }

    // A: night at home, in nursing homes and in hospital wards.
    scratch.entries.clear();
    for (i, a) in world.agents.iter().enumerate() {
        if a.disease.is_alive() {
            let place = a.hospitalized_in.unwrap_or(a.home);
            scratch.entries.push((place.0, i as u32, false));
        }
    }
    bucket(&mut scratch, n_places);
    run_buckets(world, &mut scratch, PairRule::Room);

    // B: stable members of classrooms, work rooms and care facilities.
    scratch.entries.clear();
    for (i, a) in world.agents.iter().enumerate() {
        if !a.disease.is_alive() {
            continue;
        }
        if scratch.on_duty[i] {
            let duty = a.duty.expect("on duty implies a duty place");
            scratch.entries.push((duty.0, i as u32, a.role.is_care_operator()));
            if let Some(log) = world.movement_log.as_mut() {
                log.push(Movement { day, agent: a.id, place: duty, phase: Phase::Stable });
            }
        } else if let Some(h) = a.hospitalized_in {
            scratch.entries.push((h.0, i as u32, false));
        } else if a.role == Role::NursingResident {
            scratch.entries.push((a.home.0, i as u32, false));
        }
    }
    bucket(&mut scratch, n_places);
    run_buckets(world, &mut scratch, PairRule::Stable);

    // C: temporary visitors in houses, factories and care facilities, and in open spaces.
    scratch.entries.clear();
    let isolate = world.params.isolate_care;
    for i in 0..n {
        let a = &world.agents[i];
        if !a.disease.is_alive() {
            continue;
        }
        if scratch.on_duty[i] {
            let duty = a.duty.expect("on duty implies a duty place");
            if world.places[duty.index()].kind != PlaceKind::School {
                scratch.entries.push((duty.0, i as u32, false));
            }
        } else if scratch.roams[i] {
            let k = pick_index(&mut world.rng, a.usual_places.len());
            let mut up = a.usual_places[k];
            if isolate && matches!(world.places[up.index()].kind, PlaceKind::Hospital | PlaceKind::NursingHome) {
                up = a.usual_places[0];
            }
            scratch.entries.push((up.0, i as u32, true));
        } else {
            let place = a.hospitalized_in.unwrap_or(a.home);
            scratch.entries.push((place.0, i as u32, false));
        }
    }
    log_moves(world, &scratch, Phase::Visit, true);
    bucket(&mut scratch, n_places);
    run_buckets(world, &mut scratch, PairRule::VisitRadius);

    // D: free time in open spaces.
    scratch.entries.clear();
    for i in 0..n {
        if !scratch.roams[i] {
            continue;
        }
        let a = &world.agents[i];
        // Open spaces lead the usual places.
        let open = a
            .usual_places
            .iter()
            .take_while(|u| world.places[u.index()].kind == PlaceKind::OpenSpace)
            .count();
        let up = a.usual_places[pick_index(&mut world.rng, open)];
        scratch.entries.push((up.0, i as u32, true));
    }
    log_moves(world, &scratch, Phase::Open, false);
    bucket(&mut scratch, n_places);
    run_buckets(world, &mut scratch, PairRule::Radius);

    world.scratch = scratch;
    progress(world);

    let c = world.counters;
    DayReport {
        day,
        new_infections: c.new_infections,
        by_site: c.by_site,
        new_symptomatic: c.new_symptomatic,
        new_asymptomatic: c.new_asymptomatic,
        tallies: Tallies::of(world),
        cum_symptomatic: c.cum_symptomatic,
        cum_infected: c.cum_infected,
    }
}

/// Recomputes the running counters from agent states, after manual edits.
pub fn recount(world: &mut World) {
    let t = Tallies::of(world);
    world.counters.active = t.incubating + t.symptomatic + t.asymptomatic;
    world.counters.deceased = t.deceased;
    world.counters.cum_infected = world.agents.len() as u32 - t.susceptible;
    world.counters.cum_symptomatic = world
        .agents
        .iter()
        .filter(|a| {
            matches!(
                a.disease.health,
                Health::Infected { symptomatic: true } | Health::Recovered { was_symptomatic: true } | Health::Deceased
            )
        })
        .count() as u32;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub cum_symptomatic: u32,
    pub cum_total: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyRow {
    pub day: u32,
    pub new_symptomatic: u32,
    pub new_asymptomatic: u32,
    pub cum_symptomatic: u32,
    pub cum_total: u32,
    pub deceased: u32,
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    /// Last simulated day.
    pub duration: u32,
    /// Stopped by the day cap while contagions were still active.
    pub truncated: bool,
    pub cum_symptomatic: u32,
    /// Agents ever infected, deceased included.
    pub cum_total: u32,
    pub deceased: u32,
    pub daily: Vec<DailyRow>,
    /// Cumulative counts at the calendar checkpoints; `None` when the
    /// epidemic ended earlier.
    pub checkpoints: [Option<Snapshot>; 5],
    pub events: Vec<InfectionEvent>,
}

impl RunRecord {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            duration: 0,
            truncated: false,
            cum_symptomatic: 0,
            cum_total: 0,
            deceased: 0,
            daily: Vec::new(),
            checkpoints: [None; 5],
            events: Vec::new(),
        }
    }

    pub fn alive_at(&self, checkpoint: usize) -> bool {
        self.checkpoints[checkpoint].is_some()
    }

    /// Symptomatic agents infected in the given day range, inclusive.
    pub fn symptomatic_between(&self, from: u32, to: u32) -> u32 {
        self.daily.iter().filter(|r| (from..=to).contains(&r.day)).map(|r| r.new_symptomatic).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopRule {
    pub max_days: u32,
    /// Stop as soon as no agent is incubating or infected.
    pub on_extinction: bool,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_days: 1500, on_extinction: true }
    }
}

/// Advances `world` day by day, applying `schedule`, until the stop rule
/// fires or `until_day` is reached. `before_day` runs before each step with
/// the day about to be simulated. Returns true once the run has ended.
pub fn run_until(
    world: &mut World,
    schedule: &Schedule,
    record: &mut RunRecord,
    stop: &StopRule,
    until_day: Option<u32>,
    before_day: &mut dyn FnMut(&mut World, u32),
) -> bool {
    let checkpoints = calendar::checkpoint_days();
    let last_import = schedule.last_import_day().unwrap_or(0);
    loop {
        // A quiet world still waits for infections scheduled to arrive later.
        if stop.on_extinction
            && world.counters.active == 0
            && world.pending_imports == 0
            && world.day >= last_import
        {
            return true;
        }
        if world.day >= stop.max_days {
            record.truncated = world.counters.active > 0;
            return true;
        }
        if until_day.is_some_and(|u| world.day >= u) {
            return false;
        }
        let day = world.day + 1;
        world.params = schedule.params_on(&world.base_params, day);
        world.pending_imports += schedule.imports_on(day);
        before_day(world, day);
        let report = step_day(world);
        record.duration = day;
        record.cum_symptomatic = report.cum_symptomatic;
        record.cum_total = report.cum_infected;
        record.deceased = report.tallies.deceased;
        record.daily.push(DailyRow {
            day,
            new_symptomatic: report.new_symptomatic,
            new_asymptomatic: report.new_asymptomatic,
            cum_symptomatic: report.cum_symptomatic,
            cum_total: report.cum_infected,
            deceased: report.tallies.deceased,
        });
        for (k, &cp) in checkpoints.iter().enumerate() {
            if cp == day {
                record.checkpoints[k] =
                    Some(Snapshot { cum_symptomatic: report.cum_symptomatic, cum_total: report.cum_infected });
            }
        }
    }
}

/// Runs one replication to its end and hands over the infection events.
pub fn run_epidemic(world: &mut World, schedule: &Schedule, stop: &StopRule) -> RunRecord {
    let mut record = RunRecord::new(world.seed);
    record.cum_symptomatic = world.counters.cum_symptomatic;
    record.cum_total = world.counters.cum_infected;
    run_until(world, schedule, &mut record, stop, None, &mut |_, _| {});
    record.events = mem::take(&mut world.events);
    record
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{build_world, DiseaseState, WorldConfig};

    fn small() -> WorldConfig {
        WorldConfig {
            population: 435,
            census: [13, 8, 24, 156, 118, 26, 90],
            open_spaces: 40,
            ..WorldConfig::default()
        }
    }

    #[test]
    fn susceptibility_values() {
        assert_eq!(susceptibility_factor(1), 5.0);
        assert_eq!(susceptibility_factor(0), 1.0);
        assert_eq!(susceptibility_factor(-1), 0.2);
        assert_eq!(susceptibility_factor(-2), 0.04);
        assert_eq!(intrinsic_susceptibility(Group::G1), 5.0);
        assert_eq!(intrinsic_susceptibility(Group::G7), 0.04);
    }

    fn agent_with(group: Group, health: Health) -> Agent {
        Agent {
            id: AgentId(0),
            group,
            role: Role::Other,
            fragility_exponent: group.fragility_exponent(),
            home: PlaceId(0),
            usual_places: Vec::new(),
            duty: None,
            room: 0,
            disease: DiseaseState { health, ..DiseaseState::SUSCEPTIBLE },
            vaccination: Default::default(),
            hospitalized_in: None,
        }
    }

    #[test]
    fn probability_composition() {
        let sym = agent_with(Group::G4, Health::Infected { symptomatic: true });
        let asym = agent_with(Group::G4, Health::Infected { symptomatic: false });
        let fragile = agent_with(Group::G5, Health::Susceptible);
        let regular = agent_with(Group::G6, Health::Susceptible);
        let extra = agent_with(Group::G1, Health::Susceptible);
        let p = |prob: f64| EpidemicParams { prob, ..Default::default() };
        assert_eq!(infection_probability(&sym, &fragile, &p(0.05)), 0.05);
        let expected = 0.02 * 0.5 * 0.2;
        assert!((infection_probability(&asym, &regular, &p(0.02)) - expected).abs() < 1e-15);
        assert_eq!(infection_probability(&sym, &extra, &p(1.0)), 1.0);
    }

    #[test]
    fn movement_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worker = agent_with(Group::G4, Health::Infected { symptomatic: true });
        worker.role = Role::Worker;
        worker.duty = Some(PlaceId(1));
        let free = EpidemicParams::default();
        assert!(!may_move(&worker, &free, true, &mut rng));

        let full = EpidemicParams {
            lockdown: true,
            pct_any_leaving: 0.0,
            pct_not_fragile_leaving: 0.0,
            pct_open_factories: 0.0,
            activate_schools: false,
            ..Default::default()
        };
        let mut op = agent_with(Group::G1, Health::Susceptible);
        op.role = Role::HealthcareOperator;
        assert!(may_move(&op, &full, false, &mut rng));

        let regular = agent_with(Group::G6, Health::Susceptible);
        let only_regular = EpidemicParams { pct_not_fragile_leaving: 100.0, ..full.clone() };
        assert!(may_move(&regular, &only_regular, false, &mut rng));
        let fragile = agent_with(Group::G5, Health::Susceptible);
        assert!(!may_move(&fragile, &only_regular, false, &mut rng));

        let mut fragile_worker = agent_with(Group::G3, Health::Susceptible);
        fragile_worker.role = Role::Worker;
        fragile_worker.duty = Some(PlaceId(1));
        assert!(may_move(&fragile_worker, &full, true, &mut rng));
        let sfw = EpidemicParams { stop_fragile_workers: true, ..full };
        assert!(!may_move(&fragile_worker, &sfw, true, &mut rng));
    }

    use rand::SeedableRng;

    fn clear_infections(world: &mut World) {
        for a in &mut world.agents {
            a.disease = DiseaseState::SUSCEPTIBLE;
        }
        world.events.clear();
        recount(world);
    }

    #[test]
    fn quiet_world_reports_nothing() {
        let mut w = build_world(&small(), 3).unwrap();
        clear_infections(&mut w);
        let r = step_day(&mut w);
        assert_eq!(r.new_infections, 0);
        assert_eq!(r.tallies.susceptible, 435);
    }

    #[test]
    fn housemate_infection_rate() {
        let mut w = build_world(&small(), 11).unwrap();
        clear_infections(&mut w);
        w.params.hospital_pct = 0.0;
        w.params.cfr_daily = 0.0;
        // A symptomatic spreader sharing a house with a regular agent.
        let (s, r) = w
            .places
            .iter()
            .filter(|p| p.kind == PlaceKind::House && p.members.len() == 2)
            .find_map(|p| {
                let (a, b) = (p.members[0], p.members[1]);
                let ga = w.agent(a).fragility_exponent;
                let gb = w.agent(b).fragility_exponent;
                if gb == -1 { Some((a, b)) } else if ga == -1 { Some((b, a)) } else { None }
            })
            .unwrap();
        let base = w.clone();
        let trials = 10_000u32;
        let mut hits = 0u32;
        for t in 0..trials {
            let mut w = base.clone();
            w.reseed(u64::from(t));
            w.agents[s.index()].disease = DiseaseState {
                health: Health::Infected { symptomatic: true },
                infected_on: 0,
                incubation_end: 0,
                infection_end: 100,
                site: None,
                infector: None,
                event: NO_EVENT,
            };
            recount(&mut w);
            step_day(&mut w);
            if w.agent(r).disease.health != Health::Susceptible {
                hits += 1;
            }
        }
        let p = 0.05 * 0.2;
        let sd = libm::sqrt(p * (1.0 - p) / f64::from(trials));
        let freq = f64::from(hits) / f64::from(trials);
        assert!((freq - p).abs() <= 3.0 * sd, "freq {freq} vs {p}");
    }

    #[test]
    fn closed_schools_have_no_school_contagion() {
        for seed in 0..5 {
            let mut w = build_world(&WorldConfig::default(), seed).unwrap();
            w.base_params.activate_schools = false;
            w.base_params.prob = 0.5;
            let rec = run_epidemic(&mut w, &Schedule::default(), &StopRule { max_days: 60, on_extinction: true });
            assert!(rec.events.iter().all(|e| e.site != Some(PlaceKind::School)));
        }
    }

    #[test]
    fn zero_probability_keeps_two_infected() {
        let mut w = build_world(&small(), 4).unwrap();
        w.base_params.prob = 0.0;
        let rec = run_epidemic(&mut w, &Schedule::default(), &StopRule::default());
        assert_eq!(rec.cum_total, 2);
        assert!(rec.duration <= 5 + 28);
    }

    #[test]
    fn runs_are_deterministic() {
        let run = || {
            let mut w = build_world(&small(), 21).unwrap();
            run_epidemic(&mut w, &Schedule::default(), &StopRule::default())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn conservation_and_monotone_states() {
        let mut w = build_world(&WorldConfig::default(), 8).unwrap();
        let rank = |h: Health| match h {
            Health::Susceptible => 0,
            Health::Incubating => 1,
            Health::Infected { .. } => 2,
            Health::Recovered { .. } | Health::Deceased => 3,
        };
        let mut prev: Vec<Health> = w.agents.iter().map(|a| a.disease.health).collect();
        for _ in 0..200 {
            let r = step_day(&mut w);
            assert_eq!(r.tallies.total(), 4350);
            for (a, p) in w.agents.iter().zip(&prev) {
                assert!(rank(a.disease.health) >= rank(*p));
                if a.disease.health == Health::Deceased {
                    assert!(matches!(p, Health::Infected { symptomatic: true } | Health::Deceased));
                }
            }
            prev = w.agents.iter().map(|a| a.disease.health).collect();
        }
    }

    #[test]
    fn symptomatic_agents_do_not_move() {
        let mut w = build_world(&WorldConfig::default(), 2).unwrap();
        w.movement_log = Some(Vec::new());
        for _ in 0..150 {
            let before: Vec<bool> = w.agents.iter().map(|a| a.disease.is_symptomatic()).collect();
            let day = w.day + 1;
            step_day(&mut w);
            let log = w.movement_log.as_mut().unwrap();
            for m in log.iter().filter(|m| m.day == day) {
                let a = m.agent.index();
                assert!(!before[a], "symptomatic agent {a} moved on day {day}");
            }
            log.clear();
        }
    }
}
