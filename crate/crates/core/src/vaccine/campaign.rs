use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::mem;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{allocate_doses, ConsultedMask, QuotaTable};
use crate::batch::{RunSummary, DEC15, SEP20};
use crate::calendar::{VACCINATION_START_DAY, VACCINE_EFFECT_DELAY};
use crate::engine::{run_until, RunRecord, StopRule};
use crate::params::EpidemicParams;
use crate::script::Schedule;
use crate::world::{build_world, AgentId, Health, World, WorldConfig};
use crate::{Error, Result};

const FEB1: usize = 3;

/// Stream used to shuffle the dosing order, kept apart from the contagion
/// stream so that an empty campaign leaves the run untouched.
const DOSING_STREAM: u64 = 0x7661_6363;

/// How much a dosed agent infected before protection spreads, relative to an
/// unvaccinated one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpreadHypothesis {
    Full,
    Half,
    None,
}

impl SpreadHypothesis {
    pub fn factor(self) -> f64 {
        match self {
            SpreadHypothesis::Full => 1.0,
            SpreadHypothesis::Half => 0.5,
            SpreadHypothesis::None => 0.0,
        }
    }
}

/// A fixed replication paused on the eve of the campaign, ready to be
/// replayed under any number of quota tables.
#[derive(Debug, Clone)]
pub struct Campaign {
    world: World,
    record: RunRecord,
    schedule: Schedule,
    stop: StopRule,
    order: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignOutcome {
    pub record: RunRecord,
    pub start_day: u32,
    /// Cumulative first doses by group at the end of each day from the start day.
    pub vaccinated: Vec<[u32; 7]>,
    /// First doses given on each day from the start day.
    pub doses: Vec<u32>,
    /// Every dosed agent with its dose day.
    pub dosed: Vec<(AgentId, u32)>,
    pub consulted: ConsultedMask,
}

impl CampaignOutcome {
    /// What the optimizer minimizes.
    pub fn fitness(&self) -> f64 {
        f64::from(self.record.cum_symptomatic)
    }

    pub fn total_doses(&self) -> [u32; 7] {
        self.vaccinated.last().copied().unwrap_or([0; 7])
    }
}

fn eligible(world: &World, i: usize) -> bool {
    let a = &world.agents[i];
    a.disease.health == Health::Susceptible && a.vaccination.dosed_on.is_none()
}

/// Never-infected, undosed agents by group.
pub fn unvaccinated_susceptible(world: &World) -> [u32; 7] {
    let mut out = [0; 7];
    for (i, a) in world.agents.iter().enumerate() {
        if eligible(world, i) {
            out[a.group.index()] += 1;
        }
    }
    out
}

impl Campaign {
    /// Builds the world for `seed` and runs it up to the day before the
    /// vaccinations start.
    pub fn prepare(
        config: &WorldConfig,
        params: &EpidemicParams,
        schedule: &Schedule,
        seed: u64,
        stop: &StopRule,
    ) -> Result<Self> {
        let mut world = build_world(config, seed)?;
        world.set_base_params(params.clone())?;
        let mut record = RunRecord::new(seed);
        record.cum_symptomatic = world.cumulative_symptomatic();
        record.cum_total = world.cumulative_infected();
        run_until(&mut world, schedule, &mut record, stop, Some(VACCINATION_START_DAY - 1), &mut |_, _| {});
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(DOSING_STREAM);
        let mut order = vec![Vec::new(); 7];
        for (i, a) in world.agents.iter().enumerate() {
            order[a.group.index()].push(i as u32);
        }
        for o in &mut order {
            o.shuffle(&mut rng);
        }
        Ok(Self { world, record, schedule: schedule.clone(), stop: *stop, order })
    }

    /// State at the end of the day before the campaign.
    pub fn world(&self) -> &World {
        &self.world
    }

    /// Replays the rest of the run with doses given according to `table`.
    pub fn run(&self, table: &QuotaTable, spread: f64) -> Result<CampaignOutcome> {
        if table.start_day() != VACCINATION_START_DAY {
            return Err(Error::InvalidArgument(format!(
                "quota table starts on day {}, campaigns start on day {VACCINATION_START_DAY}",
                table.start_day()
            )));
        }
        if table.groups() != 7 {
            return Err(Error::InvalidArgument(format!("quota table has {} groups, expected 7", table.groups())));
        }
        if !(0.0..=1.0).contains(&spread) {
            return Err(Error::InvalidArgument(format!("spread factor {spread} outside [0, 1]")));
        }
        let mut world = self.world.clone();
        let mut record = self.record.clone();
        world.base_params.vaccinated_spread = spread;
        let mut consulted = ConsultedMask::empty(table.rows().len(), 7);
        let mut vaccinated = Vec::new();
        let mut doses = Vec::new();
        let mut dosed = Vec::new();
        let mut cum = [0u32; 7];
        let order = &self.order;
        let mut dose = |world: &mut World, day: u32| {
            let mut given = 0;
            if let Some(r) = table.row_index(day) {
                let row = &table.rows()[r];
                let remaining = unvaccinated_susceptible(world);
                let alloc = allocate_doses(row.budget, &row.quotas, &remaining);
                consulted.mark(r, &alloc.consulted);
                for (g, &n) in alloc.doses.iter().enumerate() {
                    let mut left = n;
                    for &i in &order[g] {
                        if left == 0 {
                            break;
                        }
                        let i = i as usize;
                        if eligible(world, i) {
                            world.agents[i].vaccination.dosed_on = Some(day);
                            dosed.push((AgentId(i as u32), day));
                            left -= 1;
                        }
                    }
                    cum[g] += n - left;
                    given += n - left;
                }
            }
            vaccinated.push(cum);
            doses.push(given);
        };
        run_until(&mut world, &self.schedule, &mut record, &self.stop, None, &mut dose);
        record.events = mem::take(&mut world.events);
        Ok(CampaignOutcome { record, start_day: VACCINATION_START_DAY, vaccinated, doses, dosed, consulted })
    }
}

/// Shape of the replication used as the vaccination test bed: a quiet
/// autumn followed by growth into the winter, still running once the first
/// doses take effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPick {
    /// Largest allowed ratio of the Dec-15 to the Sep-20 cumulative total.
    pub similar_ratio: f64,
    /// Smallest required ratio of the Feb-1 to the Dec-15 cumulative total.
    pub growth_ratio: f64,
}

impl Default for ScenarioPick {
    fn default() -> Self {
        Self { similar_ratio: 1.25, growth_ratio: 1.25 }
    }
}

impl ScenarioPick {
    pub fn matches(&self, run: &RunSummary) -> Result<bool> {
        let (Some(sep), Some(dec), Some(feb)) = (run.checkpoint(SEP20)?, run.checkpoint(DEC15)?, run.checkpoint(FEB1)?)
        else {
            return Ok(false);
        };
        Ok(f64::from(dec.cum_total) <= self.similar_ratio * f64::from(sep.cum_total)
            && f64::from(feb.cum_total) >= self.growth_ratio * f64::from(dec.cum_total)
            && run.duration > VACCINATION_START_DAY + VACCINE_EFFECT_DELAY)
    }
}
