//! Synthetic population, places and spatial map.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::{self, Counters, InfectionEvent, Movement, Scratch};
use crate::params::EpidemicParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlaceId(pub u32);

impl AgentId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl PlaceId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Vaccination and fragility groups, in order of decreasing fragility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    /// Extra-fragile: nursing-home residents, nursing-home and healthcare operators.
    G1,
    /// Teachers.
    G2,
    /// Workers with medical fragility.
    G3,
    /// Regular workers.
    G4,
    /// Fragile people outside the categories above.
    G5,
    /// Regular people: not young, not workers, not teachers.
    G6,
    /// Young people.
    G7,
}

impl Group {
    pub const ALL: [Group; 7] = [
        Group::G1,
        Group::G2,
        Group::G3,
        Group::G4,
        Group::G5,
        Group::G6,
        Group::G7,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        ["g1", "g2", "g3", "g4", "g5", "g6", "g7"][self.index()]
    }

    /// Exponent applied to the intrinsic susceptibility factor.
    pub fn fragility_exponent(self) -> i8 {
        match self {
            Group::G1 => 1,
            Group::G3 | Group::G5 => 0,
            Group::G2 | Group::G4 | Group::G6 => -1,
            Group::G7 => -2,
        }
    }

    /// Fragile and extra-fragile groups.
    pub fn is_fragile(self) -> bool {
        self.fragility_exponent() >= 0
    }
}

/// What an agent does during the working part of the day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    NursingResident,
    NursingOperator,
    HealthcareOperator,
    Teacher,
    Student,
    Worker,
    Other,
}

impl Role {
    pub fn is_care_operator(self) -> bool {
        matches!(self, Role::NursingOperator | Role::HealthcareOperator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PlaceKind {
    House,
    School,
    Factory,
    Hospital,
    NursingHome,
    OpenSpace,
}

impl PlaceKind {
    pub const ALL: [PlaceKind; 6] = [
        PlaceKind::House,
        PlaceKind::School,
        PlaceKind::Factory,
        PlaceKind::Hospital,
        PlaceKind::NursingHome,
        PlaceKind::OpenSpace,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PlaceKind::House => "house",
            PlaceKind::School => "school",
            PlaceKind::Factory => "factory",
            PlaceKind::Hospital => "hospital",
            PlaceKind::NursingHome => "nursing_home",
            PlaceKind::OpenSpace => "open_space",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Place {
    pub id: PlaceId,
    pub kind: PlaceKind,
    pub position: Point,
    pub capacity: u32,
    /// Residents, workers, pupils and teachers, or operators, depending on kind.
    pub members: Vec<AgentId>,
    pub cluster: u16,
    /// Work rooms of a factory; 1 for every other kind.
    pub rooms: u16,
    /// Persistent draw deciding whether a factory stays open under limitations.
    pub open_draw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Health {
    Susceptible,
    Incubating,
    Infected { symptomatic: bool },
    Recovered { was_symptomatic: bool },
    Deceased,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiseaseState {
    pub health: Health,
    /// Day of contagion.
    pub infected_on: u32,
    pub incubation_end: u32,
    pub infection_end: u32,
    /// `None` for unknown places (initial and imported cases).
    pub site: Option<PlaceKind>,
    pub infector: Option<AgentId>,
    /// Index of the agent's entry in the world event log.
    pub(crate) event: u32,
}

impl DiseaseState {
    pub const SUSCEPTIBLE: DiseaseState = DiseaseState {
        health: Health::Susceptible,
        infected_on: 0,
        incubation_end: 0,
        infection_end: 0,
        site: None,
        infector: None,
        event: u32::MAX,
    };

    pub fn is_infectious(&self) -> bool {
        matches!(self.health, Health::Infected { .. })
    }

    pub fn is_symptomatic(&self) -> bool {
        matches!(self.health, Health::Infected { symptomatic: true })
    }

    pub fn is_active(&self) -> bool {
        matches!(self.health, Health::Incubating | Health::Infected { .. })
    }

    pub fn is_alive(&self) -> bool {
        !matches!(self.health, Health::Deceased)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VaccinationState {
    pub dosed_on: Option<u32>,
}

impl VaccinationState {
    pub fn effective_from(&self) -> Option<u32> {
        self.dosed_on.map(|d| d + crate::calendar::VACCINE_EFFECT_DELAY)
    }

    pub fn is_effective(&self, day: u32) -> bool {
        self.effective_from().is_some_and(|from| day >= from)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: AgentId,
    pub group: Group,
    pub role: Role,
    pub fragility_exponent: i8,
    /// A house, or the nursing home for its residents.
    pub home: PlaceId,
    pub usual_places: Vec<PlaceId>,
    /// Workplace, classroom, hospital or nursing home.
    pub duty: Option<PlaceId>,
    pub room: u16,
    pub disease: DiseaseState,
    pub vaccination: VaccinationState,
    pub hospitalized_in: Option<PlaceId>,
}

impl Agent {
    pub fn is_fragile(&self) -> bool {
        self.fragility_exponent >= 0
    }
}

/// Relative weights of the kinds of usual places after the first one, which
/// is always an open space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UsualPlaceWeights {
    pub open_space: f64,
    pub factory: f64,
    pub house: f64,
    pub care: f64,
}

impl Default for UsualPlaceWeights {
    fn default() -> Self {
        Self { open_space: 0.5, factory: 0.3, house: 0.18, care: 0.02 }
    }
}

/// Radius of the disk over which present agents spread around a place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PresenceSpread {
    pub house: f64,
    pub building: f64,
    pub open_space: f64,
}

impl Default for PresenceSpread {
    fn default() -> Self {
        Self { house: 0.15, building: 0.45, open_space: 0.55 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub population: u32,
    /// Agents per group, g1..g7.
    pub census: [u32; 7],
    /// Share of g1 that are nursing-home residents, nursing-home operators
    /// and healthcare operators.
    pub g1_split: [f64; 3],
    /// Share of g7 attending school.
    pub student_share: f64,
    pub house_size: u32,
    /// `None` sizes the housing stock to the population.
    pub houses: Option<u32>,
    pub classroom_size: u32,
    /// `None` sizes the classrooms to the pupils.
    pub classrooms: Option<u32>,
    pub classrooms_per_school: u32,
    pub small_factory: [u32; 2],
    pub large_factory: [u32; 2],
    /// Share of workers employed by large factories.
    pub large_factory_share: f64,
    pub work_room_size: u32,
    pub hospitals: u32,
    pub nursing_homes: u32,
    pub open_spaces: u32,
    pub usual_places: u32,
    pub usual_place_weights: UsualPlaceWeights,
    /// Probability that a usual place is drawn from the agent's own town.
    pub usual_place_local_share: f64,
    pub spread: PresenceSpread,
    /// Side of the square map; 0.2 units stand for 20 m.
    pub map_side: f64,
    pub clusters: u32,
    pub cluster_sigma: f64,
    pub uniform_map: bool,
    pub initial_infected: u32,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            population: 4350,
            census: [133, 84, 240, 1560, 1179, 254, 900],
            g1_split: [0.60, 0.15, 0.25],
            student_share: 0.8,
            house_size: 2,
            houses: None,
            classroom_size: 25,
            classrooms: None,
            classrooms_per_school: 6,
            small_factory: [3, 15],
            large_factory: [50, 150],
            large_factory_share: 0.4,
            work_room_size: 60,
            hospitals: 3,
            nursing_homes: 2,
            open_spaces: 35,
            usual_places: 3,
            usual_place_weights: UsualPlaceWeights::default(),
            usual_place_local_share: 0.85,
            spread: PresenceSpread::default(),
            map_side: 400.0,
            clusters: 8,
            cluster_sigma: 15.0,
            uniform_map: false,
            initial_infected: 2,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let census: u64 = self.census.iter().map(|&c| u64::from(c)).sum();
        if census != u64::from(self.population) {
            return Err(Error::CensusMismatch { census, population: u64::from(self.population) });
        }
        if self.population == 0 {
            return Err(Error::EmptyPopulation);
        }
        let share = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name}={v} outside [0, 1]")))
            }
        };
        share("student_share", self.student_share)?;
        share("large_factory_share", self.large_factory_share)?;
        share("usual_place_local_share", self.usual_place_local_share)?;
        let split: f64 = self.g1_split.iter().sum();
        if self.g1_split.iter().any(|&s| s < 0.0) || (split - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("g1_split must be non-negative and sum to 1, got {split}")));
        }
        if self.house_size == 0 {
            return Err(Error::Capacity("house size is zero".into()));
        }
        if self.small_factory[0] == 0
            || self.small_factory[0] > self.small_factory[1]
            || self.large_factory[0] == 0
            || self.large_factory[0] > self.large_factory[1]
        {
            return Err(Error::Config("factory size ranges must be non-empty and positive".into()));
        }
        if self.work_room_size == 0 {
            return Err(Error::Config("work_room_size must be positive".into()));
        }
        if self.usual_places == 0 {
            return Err(Error::Config("agents need at least one usual place".into()));
        }
        if self.open_spaces == 0 {
            return Err(Error::Capacity("no open spaces for usual places".into()));
        }
        if !(self.map_side > 0.0) || self.clusters == 0 || !(self.cluster_sigma > 0.0) {
            return Err(Error::Config("map side, clusters and cluster sigma must be positive".into()));
        }
        let w = &self.usual_place_weights;
        if [w.open_space, w.factory, w.house, w.care].iter().any(|&x| x < 0.0)
            || w.open_space + w.factory + w.house + w.care <= 0.0
        {
            return Err(Error::Config("usual place weights must be non-negative with a positive sum".into()));
        }
        let s = &self.spread;
        if !(s.house > 0.0 && s.building > 0.0 && s.open_space > 0.0) {
            return Err(Error::Config("presence spreads must be positive".into()));
        }
        Ok(())
    }

    /// Sizes of the three g1 components: residents, nursing operators, healthcare operators.
    pub fn g1_components(&self) -> [u32; 3] {
        let g1 = self.census[0];
        let residents = libm::round(f64::from(g1) * self.g1_split[0]) as u32;
        let nursing = (libm::round(f64::from(g1) * self.g1_split[1]) as u32).min(g1 - residents);
        [residents, nursing, g1 - residents - nursing]
    }

    pub fn students(&self) -> u32 {
        libm::round(f64::from(self.census[6]) * self.student_share) as u32
    }
}

/// The simulated region for one replication.
#[derive(Debug, Clone)]
pub struct World {
    pub config: WorldConfig,
    pub seed: u64,
    pub agents: Vec<Agent>,
    pub places: Vec<Place>,
    /// Parameters in force before any scheduled change.
    pub base_params: EpidemicParams,
    /// Parameters in force on the current day.
    pub params: EpidemicParams,
    /// Last simulated day; 0 before the first step.
    pub day: u32,
    pub events: Vec<InfectionEvent>,
    /// Infected arrivals from outside, introduced at the start of the next step.
    pub pending_imports: u32,
    /// When set, every move to a place outside the home is appended here.
    pub movement_log: Option<Vec<Movement>>,
    pub(crate) counters: Counters,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) scratch: Scratch,
}

impl PartialEq for World {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.seed == other.seed
            && self.agents == other.agents
            && self.places == other.places
            && self.base_params == other.base_params
            && self.params == other.params
            && self.pending_imports == other.pending_imports
            && self.movement_log == other.movement_log
            && self.day == other.day
            && self.events == other.events
            && self.counters == other.counters
            && self.rng == other.rng
    }
}

impl World {
    pub fn population(&self) -> usize {
        self.agents.len()
    }

    pub fn place(&self, id: PlaceId) -> &Place {
        &self.places[id.index()]
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id.index()]
    }

    /// Census by group.
    pub fn census(&self) -> [u32; 7] {
        let mut out = [0u32; 7];
        for a in &self.agents {
            out[a.group.index()] += 1;
        }
        out
    }

    pub fn places_of_kind(&self, kind: PlaceKind) -> impl Iterator<Item = &Place> {
        self.places.iter().filter(move |p| p.kind == kind)
    }

    /// Agents currently incubating or infected.
    pub fn active_count(&self) -> u32 {
        self.counters.active
    }

    pub fn cumulative_symptomatic(&self) -> u32 {
        self.counters.cum_symptomatic
    }

    pub fn cumulative_infected(&self) -> u32 {
        self.counters.cum_infected
    }

    pub fn deceased(&self) -> u32 {
        self.counters.deceased
    }

    /// Installs the parameters in force before any scheduled change.
    pub fn set_base_params(&mut self, params: EpidemicParams) -> Result<()> {
        params.validate()?;
        self.params = params.clone();
        self.base_params = params;
        Ok(())
    }

    /// Replaces the random stream, e.g. to replay a world state under a new seed.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }
}

/// Builds the world for `(config, seed)`, including the initial infected.
pub fn build_world(config: &WorldConfig, seed: u64) -> Result<World> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents = create_agents(config);
    let places = create_places(config, &agents, &mut rng)?;
    let mut world = World {
        config: config.clone(),
        seed,
        agents,
        places,
        base_params: EpidemicParams::default(),
        params: EpidemicParams::default(),
        day: 0,
        events: Vec::new(),
        pending_imports: 0,
        movement_log: None,
        counters: Counters::default(),
        rng,
        scratch: Scratch::default(),
    };
    assign_places(&mut world)?;
    seed_initial_infections(&mut world)?;
    Ok(world)
}

fn create_agents(config: &WorldConfig) -> Vec<Agent> {
    let [residents, nursing, healthcare] = config.g1_components();
    let students = config.students();
    let mut specs: Vec<(Group, Role, u32)> = vec![
        (Group::G1, Role::NursingResident, residents),
        (Group::G1, Role::NursingOperator, nursing),
        (Group::G1, Role::HealthcareOperator, healthcare),
        (Group::G2, Role::Teacher, config.census[1]),
        (Group::G3, Role::Worker, config.census[2]),
        (Group::G4, Role::Worker, config.census[3]),
        (Group::G5, Role::Other, config.census[4]),
        (Group::G6, Role::Other, config.census[5]),
        (Group::G7, Role::Student, students),
    ];
    specs.push((Group::G7, Role::Other, config.census[6] - students));

    let mut agents = Vec::with_capacity(config.population as usize);
    for (group, role, n) in specs {
        for _ in 0..n {
            let id = AgentId(agents.len() as u32);
            agents.push(Agent {
                id,
                group,
                role,
                fragility_exponent: group.fragility_exponent(),
                home: PlaceId(u32::MAX),
                usual_places: Vec::new(),
                duty: None,
                room: 0,
                disease: DiseaseState::SUSCEPTIBLE,
                vaccination: VaccinationState::default(),
                hospitalized_in: None,
            });
        }
    }
    agents
}

struct MapSampler {
    centers: Vec<Point>,
    side: f64,
    normal: Normal<f64>,
    uniform: bool,
}

impl MapSampler {
    fn new(config: &WorldConfig, rng: &mut ChaCha8Rng) -> Self {
        let side = config.map_side;
        let centers = (0..config.clusters)
            .map(|_| Point {
                x: rng.random_range(0.1 * side..0.9 * side),
                y: rng.random_range(0.1 * side..0.9 * side),
            })
            .collect();
        Self {
            centers,
            side,
            normal: Normal::new(0.0, config.cluster_sigma).expect("positive sigma"),
            uniform: config.uniform_map,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (Point, u16) {
        if self.uniform {
            let p = Point { x: rng.random_range(0.0..self.side), y: rng.random_range(0.0..self.side) };
            let cluster = self
                .centers
                .iter()
                .enumerate()
                .min_by(|a, b| p.dist2(*a.1).total_cmp(&p.dist2(*b.1)))
                .map(|(i, _)| i as u16)
                .unwrap_or(0);
            return (p, cluster);
        }
        let cluster = rng.random_range(0..self.centers.len());
        let c = self.centers[cluster];
        let x = (c.x + self.normal.sample(rng)).clamp(0.0, self.side);
        let y = (c.y + self.normal.sample(rng)).clamp(0.0, self.side);
        (Point { x, y }, cluster as u16)
    }
}

fn count_role(agents: &[Agent], role: Role) -> u32 {
    agents.iter().filter(|a| a.role == role).count() as u32
}

fn factory_sizes(config: &WorldConfig, workers: u32, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut sizes = Vec::new();
    let large_target = libm::round(f64::from(workers) * config.large_factory_share) as u32;
    let mut placed = 0;
    while placed < large_target {
        let [lo, hi] = config.large_factory;
        let size = rng.random_range(lo..=hi).min(large_target - placed);
        sizes.push(size);
        placed += size;
    }
    while placed < workers {
        let [lo, hi] = config.small_factory;
        let size = rng.random_range(lo..=hi).min(workers - placed);
        sizes.push(size);
        placed += size;
    }
    sizes
}

fn create_places(config: &WorldConfig, agents: &[Agent], rng: &mut ChaCha8Rng) -> Result<Vec<Place>> {
    let map = MapSampler::new(config, rng);
    let mut places: Vec<Place> = Vec::new();
    let mut push = |kind: PlaceKind, position: Point, cluster: u16, capacity: u32, rooms: u16, open_draw: f64| {
        let id = PlaceId(places.len() as u32);
        places.push(Place { id, kind, position, capacity, members: Vec::new(), cluster, rooms, open_draw });
    };

    let residents = count_role(agents, Role::NursingResident);
    let in_houses = agents.len() as u32 - residents;
    let houses = config.houses.unwrap_or(in_houses.div_ceil(config.house_size));
    for _ in 0..houses {
        let (p, c) = map.sample(rng);
        push(PlaceKind::House, p, c, config.house_size, 1, 0.0);
    }

    let students = count_role(agents, Role::Student);
    let teachers = count_role(agents, Role::Teacher);
    let classrooms = match config.classrooms {
        Some(n) => n,
        None if config.classroom_size == 0 => 0,
        None => students.div_ceil(config.classroom_size).max(u32::from(teachers > 0)),
    };
    let per_school = config.classrooms_per_school.max(1);
    let mut school_pos = (Point::default(), 0u16);
    for i in 0..classrooms {
        if i % per_school == 0 {
            school_pos = map.sample(rng);
        }
        push(PlaceKind::School, school_pos.0, school_pos.1, config.classroom_size, 1, 0.0);
    }

    let workers = count_role(agents, Role::Worker);
    for size in factory_sizes(config, workers, rng) {
        let (p, c) = map.sample(rng);
        let rooms = size.div_ceil(config.work_room_size).max(1) as u16;
        let draw = rng.random::<f64>();
        push(PlaceKind::Factory, p, c, size, rooms, draw);
    }

    let [_, nursing_ops, healthcare_ops] = config.g1_components();
    if residents + nursing_ops > 0 && config.nursing_homes == 0 {
        return Err(Error::Capacity("nursing-home residents or operators but no nursing homes".into()));
    }
    if healthcare_ops > 0 && config.hospitals == 0 {
        return Err(Error::Capacity("healthcare operators but no hospitals".into()));
    }
    for _ in 0..config.hospitals {
        let (p, c) = map.sample(rng);
        push(PlaceKind::Hospital, p, c, healthcare_ops.div_ceil(config.hospitals), 1, 0.0);
    }
    for _ in 0..config.nursing_homes {
        let (p, c) = map.sample(rng);
        push(PlaceKind::NursingHome, p, c, residents.div_ceil(config.nursing_homes), 1, 0.0);
    }
    for _ in 0..config.open_spaces {
        let (p, c) = map.sample(rng);
        push(PlaceKind::OpenSpace, p, c, 0, 1, 0.0);
    }
    Ok(places)
}

fn ids_of(places: &[Place], kind: PlaceKind) -> Vec<PlaceId> {
    places.iter().filter(|p| p.kind == kind).map(|p| p.id).collect()
}

/// Binds every agent to a home, an occupation place and its usual places.
///
/// Existing bindings are discarded. Fails when the places cannot host the
/// agents at their configured capacities.
pub fn assign_places(world: &mut World) -> Result<()> {
    let config = world.config.clone();
    for p in &mut world.places {
        p.members.clear();
    }
    for a in &mut world.agents {
        a.duty = None;
        a.room = 0;
        a.usual_places.clear();
    }
    let rng = &mut world.rng;
    let agents = &mut world.agents;
    let places = &mut world.places;

    // Homes: nursing-home residents live in their facility, everybody else in houses.
    let houses = ids_of(places, PlaceKind::House);
    let nursing_homes = ids_of(places, PlaceKind::NursingHome);
    let hospitals = ids_of(places, PlaceKind::Hospital);
    let mut housed: Vec<AgentId> =
        agents.iter().filter(|a| a.role != Role::NursingResident).map(|a| a.id).collect();
    housed.shuffle(rng);
    let house_size = config.house_size as usize;
    if housed.len() > houses.len() * house_size {
        return Err(Error::Capacity(format!(
            "{} houses of size {} cannot host {} agents",
            houses.len(),
            house_size,
            housed.len()
        )));
    }
    for (chunk, &house) in housed.chunks(house_size).zip(&houses) {
        for &id in chunk {
            agents[id.index()].home = house;
            places[house.index()].members.push(id);
        }
    }

    let mut resident_i = 0usize;
    let mut nursing_i = 0usize;
    let mut healthcare_i = 0usize;
    for a in agents.iter_mut() {
        match a.role {
            Role::NursingResident => {
                let nh = nursing_homes[resident_i % nursing_homes.len()];
                resident_i += 1;
                a.home = nh;
                places[nh.index()].members.push(a.id);
            }
            Role::NursingOperator => {
                let nh = nursing_homes[nursing_i % nursing_homes.len()];
                nursing_i += 1;
                a.duty = Some(nh);
                places[nh.index()].members.push(a.id);
            }
            Role::HealthcareOperator => {
                let h = hospitals[healthcare_i % hospitals.len()];
                healthcare_i += 1;
                a.duty = Some(h);
                places[h.index()].members.push(a.id);
            }
            _ => {}
        }
    }

    // Classrooms: pupils fill rooms in order, teachers are spread round-robin.
    let classrooms = ids_of(places, PlaceKind::School);
    let mut students: Vec<AgentId> = agents.iter().filter(|a| a.role == Role::Student).map(|a| a.id).collect();
    let size = config.classroom_size as usize;
    if students.len() > classrooms.len() * size {
        return Err(Error::Capacity(format!(
            "{} classrooms of {} cannot host {} students",
            classrooms.len(),
            size,
            students.len()
        )));
    }
    students.shuffle(rng);
    for (chunk, &room) in students.chunks(size.max(1)).zip(&classrooms) {
        for &id in chunk {
            agents[id.index()].duty = Some(room);
            places[room.index()].members.push(id);
        }
    }
    let mut teachers: Vec<AgentId> = agents.iter().filter(|a| a.role == Role::Teacher).map(|a| a.id).collect();
    if !teachers.is_empty() && classrooms.is_empty() {
        return Err(Error::Capacity("teachers but no classrooms".into()));
    }
    teachers.shuffle(rng);
    for (i, id) in teachers.into_iter().enumerate() {
        let room = classrooms[i % classrooms.len()];
        agents[id.index()].duty = Some(room);
        places[room.index()].members.push(id);
    }

    // Factories: workers fill buildings in order and rotate over work rooms.
    let factories = ids_of(places, PlaceKind::Factory);
    let mut workers: Vec<AgentId> = agents.iter().filter(|a| a.role == Role::Worker).map(|a| a.id).collect();
    let capacity: usize = factories.iter().map(|f| places[f.index()].capacity as usize).sum();
    if workers.len() > capacity {
        return Err(Error::Capacity(format!("factories host {capacity} workers, {} needed", workers.len())));
    }
    workers.shuffle(rng);
    let mut it = workers.into_iter();
    'fill: for &f in &factories {
        let cap = places[f.index()].capacity as usize;
        let rooms = places[f.index()].rooms;
        for slot in 0..cap {
            let Some(id) = it.next() else { break 'fill };
            let a = &mut agents[id.index()];
            a.duty = Some(f);
            a.room = (slot % rooms as usize) as u16;
            places[f.index()].members.push(id);
        }
    }

    // Usual places, preferring the agent's own town.
    let n_clusters = config.clusters as usize;
    let mut by_cluster: [Vec<Vec<PlaceId>>; 4] = core::array::from_fn(|_| vec![Vec::new(); n_clusters]);
    let mut global: [Vec<PlaceId>; 4] = core::array::from_fn(|_| Vec::new());
    for p in places.iter() {
        let slot = match p.kind {
            PlaceKind::OpenSpace => 0,
            PlaceKind::Factory => 1,
            PlaceKind::House => 2,
            PlaceKind::Hospital | PlaceKind::NursingHome => 3,
            PlaceKind::School => continue,
        };
        by_cluster[slot][p.cluster as usize % n_clusters].push(p.id);
        global[slot].push(p.id);
    }
    let w = &config.usual_place_weights;
    let weights = [w.open_space, w.factory, w.house, w.care];
    let total_w: f64 = weights.iter().zip(&global).filter(|(_, g)| !g.is_empty()).map(|(w, _)| w).sum();
    let local_share = config.usual_place_local_share;
    let pick = |slot: usize, cluster: usize, rng: &mut ChaCha8Rng| -> PlaceId {
        let local = &by_cluster[slot][cluster];
        let list = if !local.is_empty() && rng.random::<f64>() < local_share { local } else { &global[slot] };
        list[rng.random_range(0..list.len())]
    };
    for i in 0..agents.len() {
        let cluster = places[agents[i].home.index()].cluster as usize % n_clusters;
        let mut ups = Vec::with_capacity(config.usual_places as usize);
        ups.push(pick(0, cluster, rng));
        for _ in 1..config.usual_places {
            let mut u = rng.random::<f64>() * total_w;
            let mut slot = 0;
            for (s, (&wt, g)) in weights.iter().zip(&global).enumerate() {
                if g.is_empty() {
                    continue;
                }
                slot = s;
                if u < wt {
                    break;
                }
                u -= wt;
            }
            ups.push(pick(slot, cluster, rng));
        }
        ups.sort_by_key(|u| places[u.index()].kind != PlaceKind::OpenSpace);
        agents[i].usual_places = ups;
    }
    Ok(())
}

fn seed_initial_infections(world: &mut World) -> Result<()> {
    let eligible: Vec<AgentId> = world
        .agents
        .iter()
        .filter(|a| {
            !matches!(a.role, Role::NursingResident | Role::NursingOperator | Role::HealthcareOperator)
        })
        .map(|a| a.id)
        .collect();
    let n = world.config.initial_infected as usize;
    if n > eligible.len() {
        return Err(Error::Capacity(format!("{n} initial infected but only {} eligible agents", eligible.len())));
    }
    let picks = rand::seq::index::sample(&mut world.rng, eligible.len(), n);
    for i in picks.iter() {
        engine::infect_from_outside(world, eligible[i]);
    }
    Ok(())
}
