//! Day-indexed intervention scripts.
//!
//! One directive per line:
//!
//! ```text
//! # comment
//! at 49 set prob 0.02
//! at 20 set lockdown on
//! at 211 import 2
//! ```

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::params::EpidemicParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Param {
    Prob,
    DPct,
    Radius,
    Lockdown,
    PctAnyLeaving,
    PctNotFragileLeaving,
    PctOpenFactories,
    StopFragileWorkers,
    ActivateSchools,
    PctStudents,
    IsolateCare,
    AsymRegularPct,
    AsymFragilePct,
    CfrDaily,
    HospitalPct,
    VaccinatedSpread,
}

impl Param {
    pub const ALL: [Param; 16] = [
        Param::Prob,
        Param::DPct,
        Param::Radius,
        Param::Lockdown,
        Param::PctAnyLeaving,
        Param::PctNotFragileLeaving,
        Param::PctOpenFactories,
        Param::StopFragileWorkers,
        Param::ActivateSchools,
        Param::PctStudents,
        Param::IsolateCare,
        Param::AsymRegularPct,
        Param::AsymFragilePct,
        Param::CfrDaily,
        Param::HospitalPct,
        Param::VaccinatedSpread,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Prob => "prob",
            Param::DPct => "d_pct",
            Param::Radius => "radius",
            Param::Lockdown => "lockdown",
            Param::PctAnyLeaving => "pct_any_leaving",
            Param::PctNotFragileLeaving => "pct_not_fragile_leaving",
            Param::PctOpenFactories => "pct_open_factories",
            Param::StopFragileWorkers => "stop_fragile_workers",
            Param::ActivateSchools => "activate_schools",
            Param::PctStudents => "pct_students",
            Param::IsolateCare => "isolate_care",
            Param::AsymRegularPct => "asym_regular_pct",
            Param::AsymFragilePct => "asym_fragile_pct",
            Param::CfrDaily => "cfr_daily",
            Param::HospitalPct => "hospital_pct",
            Param::VaccinatedSpread => "vaccinated_spread",
        }
    }

    /// Accepts the field name or its short script alias.
    pub fn parse(name: &str) -> Option<Param> {
        let alias = match name {
            "sFW" => Some(Param::StopFragileWorkers),
            "aSch" => Some(Param::ActivateSchools),
            _ => None,
        };
        alias.or_else(|| Param::ALL.into_iter().find(|p| p.name() == name))
    }

    fn is_flag(self) -> bool {
        matches!(
            self,
            Param::Lockdown | Param::StopFragileWorkers | Param::ActivateSchools | Param::IsolateCare
        )
    }

    fn is_percent(self) -> bool {
        matches!(
            self,
            Param::PctAnyLeaving
                | Param::PctNotFragileLeaving
                | Param::PctOpenFactories
                | Param::PctStudents
                | Param::AsymRegularPct
                | Param::AsymFragilePct
                | Param::HospitalPct
        )
    }

    fn check(self, v: f64) -> core::result::Result<(), String> {
        let ok = match self {
            _ if self.is_flag() => v == 0.0 || v == 1.0,
            _ if self.is_percent() => (0.0..=100.0).contains(&v),
            Param::DPct => (-100.0..=100.0).contains(&v),
            Param::Prob | Param::CfrDaily | Param::VaccinatedSpread => (0.0..=1.0).contains(&v),
            Param::Radius => v > 0.0,
            _ => true,
        };
        if ok { Ok(()) } else { Err(format!("value {v} out of range for {}", self.name())) }
    }

    pub fn apply(self, params: &mut EpidemicParams, v: f64) {
        let flag = v != 0.0;
        match self {
            Param::Prob => params.prob = v,
            Param::DPct => params.d_pct = v,
            Param::Radius => params.radius = v,
            Param::Lockdown => params.lockdown = flag,
            Param::PctAnyLeaving => params.pct_any_leaving = v,
            Param::PctNotFragileLeaving => params.pct_not_fragile_leaving = v,
            Param::PctOpenFactories => params.pct_open_factories = v,
            Param::StopFragileWorkers => params.stop_fragile_workers = flag,
            Param::ActivateSchools => params.activate_schools = flag,
            Param::PctStudents => params.pct_students = v,
            Param::IsolateCare => params.isolate_care = flag,
            Param::AsymRegularPct => params.asym_regular_pct = v,
            Param::AsymFragilePct => params.asym_fragile_pct = v,
            Param::CfrDaily => params.cfr_daily = v,
            Param::HospitalPct => params.hospital_pct = v,
            Param::VaccinatedSpread => params.vaccinated_spread = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Set(Param, f64),
    /// Infected arrivals from outside.
    Import(u32),
}

impl Action {
    fn key(&self) -> Option<Param> {
        match self {
            Action::Set(p, _) => Some(*p),
            Action::Import(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub day: u32,
    pub action: Action,
}

/// Intervention calendar, sorted by day. At most one entry per `(day, param)`
/// and one import per day.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    entries: Vec<Entry>,
    pub warnings: Vec<String>,
}

fn parse_value(param: Param, raw: &str, line: usize) -> Result<f64> {
    let v = match (param.is_flag(), raw) {
        (true, "on" | "true") => 1.0,
        (true, "off" | "false") => 0.0,
        _ => raw
            .parse::<f64>()
            .map_err(|_| Error::Script { line, message: format!("non-numeric value {raw:?}") })?,
    };
    if !v.is_finite() {
        return Err(Error::Script { line, message: format!("non-finite value {raw:?}") });
    }
    param.check(v).map_err(|message| Error::Script { line, message })?;
    Ok(v)
}

/// Parses a script; later duplicates of a `(day, param)` pair replace earlier
/// ones and leave a warning.
pub fn parse_script(text: &str) -> Result<Schedule> {
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let err = |message: String| Error::Script { line: line_no, message };
        if tokens.first() != Some(&"at") || tokens.len() < 3 {
            return Err(err(format!("expected `at <day> set <param> <value>`, got {content:?}")));
        }
        let day: u32 = tokens[1].parse().map_err(|_| err(format!("invalid day {:?}", tokens[1])))?;
        let action = match (tokens[2], tokens.len()) {
            ("set", 5) => {
                let param = Param::parse(tokens[3]).ok_or_else(|| err(format!("unknown parameter {:?}", tokens[3])))?;
                Action::Set(param, parse_value(param, tokens[4], line_no)?)
            }
            ("import", 4) => {
                Action::Import(tokens[3].parse().map_err(|_| err(format!("invalid import count {:?}", tokens[3])))?)
            }
            _ => return Err(err(format!("malformed directive {content:?}"))),
        };
        raw.push(Entry { day, action });
    }
    Ok(Schedule::from_entries(raw))
}

impl Schedule {
    /// Builds a schedule from entries in their original order.
    pub fn from_entries(entries: Vec<Entry>) -> Schedule {
        let mut by_key: BTreeMap<(u32, Option<Param>), (usize, Entry)> = BTreeMap::new();
        let mut warnings = Vec::new();
        for (seq, e) in entries.into_iter().enumerate() {
            let key = (e.day, e.action.key());
            if by_key.insert(key, (seq, e)).is_some() {
                let what = e.action.key().map_or("import", Param::name);
                warnings.push(format!("day {}: {what} set twice, the later value wins", e.day));
            }
        }
        let mut kept: Vec<(usize, Entry)> = by_key.into_values().collect();
        kept.sort_by_key(|(seq, e)| (e.day, *seq));
        Schedule { entries: kept.into_iter().map(|(_, e)| e).collect(), warnings }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parameters in force on `day`: `base` overlaid with every entry up to it.
    pub fn params_on(&self, base: &EpidemicParams, day: u32) -> EpidemicParams {
        let mut p = base.clone();
        for e in self.entries.iter().take_while(|e| e.day <= day) {
            if let Action::Set(param, v) = e.action {
                param.apply(&mut p, v);
            }
        }
        p
    }

    pub fn imports_on(&self, day: u32) -> u32 {
        self.entries
            .iter()
            .filter(|e| e.day == day)
            .map(|e| match e.action {
                Action::Import(n) => n,
                Action::Set(..) => 0,
            })
            .sum()
    }

    /// Last day carrying a positive import, if any.
    pub fn last_import_day(&self) -> Option<u32> {
        self.entries
            .iter()
            .filter(|e| matches!(e.action, Action::Import(n) if n > 0))
            .map(|e| e.day)
            .max()
    }

    /// Entries strictly before `day`.
    pub fn before(&self, day: u32) -> Schedule {
        Schedule { entries: self.entries.iter().copied().filter(|e| e.day < day).collect(), warnings: Vec::new() }
    }

    /// Appends the entries of `other`; on a shared `(day, param)` the entry of
    /// `other` wins.
    pub fn merged(&self, other: &Schedule) -> Schedule {
        let mut all = self.entries.clone();
        all.extend_from_slice(&other.entries);
        Schedule::from_entries(all)
    }

    /// Moves every entry on or after `barrier` by `-shift` days without
    /// crossing the barrier. Entries that land on the same `(day, param)`
    /// keep the one that was originally later.
    pub fn anticipated(&self, shift: u32, barrier: u32) -> Schedule {
        let moved = self
            .entries
            .iter()
            .map(|e| {
                let day = if e.day >= barrier { e.day.saturating_sub(shift).max(barrier) } else { e.day };
                Entry { day, ..*e }
            })
            .collect();
        let mut s = Schedule::from_entries(moved);
        s.warnings.clear();
        s
    }

    /// Canonical text form; parsing it gives back an equal schedule.
    pub fn to_script(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = match e.action {
                Action::Set(p, v) => format!("at {} set {} {}\n", e.day, p.name(), v),
                Action::Import(n) => format!("at {} import {}\n", e.day, n),
            };
            out.push_str(&line);
        }
        out
    }
}

/// Applies `schedule` to `params` on `day`.
pub fn apply_schedule(params: &EpidemicParams, schedule: &Schedule, day: u32) -> EpidemicParams {
    schedule.params_on(params, day)
}

const NO_CONTAINMENT: &str = include_str!("../scenarios/no_containment.sched");
const BASELINE: &str = include_str!("../scenarios/baseline_appendix1.sched");
const SECOND_WAVE_IMPORT: &str = include_str!("../scenarios/second_wave_import.sched");
const FRAGILE_STOP: &str = include_str!("../scenarios/fragile_stop.sched");

/// Bundled scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    NoContainment,
    BaselineAppendix1,
    /// First-wave measures only, plus two infected arrivals on 2020-09-01.
    ForcedSecondWave,
    /// All measures plus the arrivals.
    SecondWaveMeasures,
    /// As above with the post-barrier measures 20 days earlier.
    Minus20,
    /// First-wave measures, arrivals, and a stop of fragile people from the barrier day.
    FragileOnlyStop,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::NoContainment,
        Scenario::BaselineAppendix1,
        Scenario::ForcedSecondWave,
        Scenario::SecondWaveMeasures,
        Scenario::Minus20,
        Scenario::FragileOnlyStop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::NoContainment => "no_containment",
            Scenario::BaselineAppendix1 => "baseline_appendix1",
            Scenario::ForcedSecondWave => "forced_second_wave",
            Scenario::SecondWaveMeasures => "second_wave_measures",
            Scenario::Minus20 => "minus20",
            Scenario::FragileOnlyStop => "fragile_only_stop",
        }
    }

    pub fn parse(name: &str) -> Option<Scenario> {
        match name {
            "baseline" => Some(Scenario::BaselineAppendix1),
            _ => Scenario::ALL.into_iter().find(|s| s.name() == name),
        }
    }

    pub fn schedule(self) -> Schedule {
        let parse = |text: &str| parse_script(text).expect("bundled script parses");
        let barrier = crate::calendar::barrier_day();
        let baseline = parse(BASELINE);
        let arrivals = parse(SECOND_WAVE_IMPORT);
        match self {
            Scenario::NoContainment => parse(NO_CONTAINMENT),
            Scenario::BaselineAppendix1 => baseline,
            Scenario::ForcedSecondWave => baseline.before(barrier).merged(&arrivals),
            Scenario::SecondWaveMeasures => baseline.merged(&arrivals),
            Scenario::Minus20 => baseline.anticipated(20, barrier).merged(&arrivals),
            Scenario::FragileOnlyStop => baseline.before(barrier).merged(&arrivals).merged(&parse(FRAGILE_STOP)),
        }
    }
}

impl core::fmt::Display for Scenario {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::parse(s).ok_or_else(|| Error::InvalidArgument(format!("unknown scenario {s:?}")))
    }
}

impl core::fmt::Display for Param {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_a_directive() {
        let s = parse_script("at 49 set prob 0.02").unwrap();
        assert_eq!(s.entries(), &[Entry { day: 49, action: Action::Set(Param::Prob, 0.02) }]);
    }

    #[test]
    fn empty_text_is_empty_schedule() {
        assert!(parse_script("").unwrap().is_empty());
        assert!(parse_script("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_directives() {
        assert!(matches!(parse_script("at 10 set bogus 1"), Err(Error::Script { line: 1, .. })));
        assert!(matches!(parse_script("\nat 10 set prob x"), Err(Error::Script { line: 2, .. })));
        assert!(parse_script("at 10 set pct_any_leaving 120").is_err());
        assert!(parse_script("at 10 set lockdown 2").is_err());
        assert!(parse_script("at ten set prob 0.1").is_err());
        assert!(parse_script("set prob 0.1").is_err());
    }

    #[test]
    fn aliases_and_flags() {
        let s = parse_script("at 245 set sFW 1\nat 17 set aSch off").unwrap();
        let p = s.params_on(&EpidemicParams::default(), 300);
        assert!(p.stop_fragile_workers);
        assert!(!p.activate_schools);
    }

    #[test]
    fn duplicate_keeps_later_with_warning() {
        let s = parse_script("at 5 set prob 0.1\nat 5 set prob 0.3").unwrap();
        assert_eq!(s.entries().len(), 1);
        assert_eq!(s.params_on(&EpidemicParams::default(), 5).prob, 0.3);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn baseline_values() {
        let s = Scenario::BaselineAppendix1.schedule();
        assert!(s.warnings.is_empty(), "{:?}", s.warnings);
        let base = EpidemicParams::default();
        assert_eq!(s.params_on(&base, 0), base);
        assert_eq!(s.params_on(&base, 31).pct_any_leaving, 0.0);
        assert_eq!(s.params_on(&base, 31).pct_not_fragile_leaving, 80.0);
        assert_eq!(s.params_on(&base, 48).prob, 0.05);
        assert_eq!(s.params_on(&base, 49).prob, 0.02);
        assert_eq!(s.params_on(&base, 149).prob, 0.035);
        assert_eq!(s.params_on(&base, 266).prob, 0.02);
        assert!(!s.params_on(&base, 19).lockdown);
        assert!(s.params_on(&base, 20).lockdown);
        assert!(!s.params_on(&base, 17).activate_schools);
        assert!(s.params_on(&base, 225).activate_schools);
        assert!(!s.params_on(&base, 325).activate_schools);
        assert!(s.params_on(&base, 339).activate_schools);
        assert_eq!(s.params_on(&base, 277).pct_students, 50.0);
        assert_eq!(s.params_on(&base, 38).pct_open_factories, 0.0);
        assert_eq!(s.params_on(&base, 336).pct_open_factories, 90.0);
        assert_eq!(s.params_on(&base, 339).pct_not_fragile_leaving, 100.0);
    }

    #[test]
    fn second_wave_scenarios() {
        let forced = Scenario::ForcedSecondWave.schedule();
        assert_eq!(forced.imports_on(211), 2);
        assert!(forced.entries().iter().all(|e| e.day < 245));
        let frag = Scenario::FragileOnlyStop.schedule();
        let base = EpidemicParams::default();
        let p = frag.params_on(&base, 250);
        assert!(p.stop_fragile_workers && p.isolate_care && p.activate_schools);
        assert_eq!(p.pct_any_leaving, 0.0);
        assert_eq!(p.pct_not_fragile_leaving, 100.0);
        assert!(!frag.params_on(&base, 275).stop_fragile_workers);
        assert!(!frag.params_on(&base, 305).isolate_care);
        let m20 = Scenario::Minus20.schedule();
        assert_eq!(m20.params_on(&base, 246).prob, 0.02);
        assert_eq!(m20.params_on(&base, 245).prob, 0.035);
        assert!(!m20.params_on(&base, 305).activate_schools);
        let measures = Scenario::SecondWaveMeasures.schedule();
        for d in 0..245 {
            assert_eq!(m20.params_on(&base, d), measures.params_on(&base, d));
            assert_eq!(frag.params_on(&base, d), forced.params_on(&base, d));
        }
    }

    #[test]
    fn canonical_text_round_trip() {
        for sc in Scenario::ALL {
            let s = sc.schedule();
            let back = parse_script(&s.to_script()).unwrap();
            assert_eq!(back.entries(), s.entries());
        }
    }

    fn arb_schedule() -> impl Strategy<Value = Vec<Entry>> {
        prop::collection::vec(
            (0u32..400, 0usize..Param::ALL.len(), 0.0f64..1.0).prop_map(|(day, k, v)| {
                let p = Param::ALL[k];
                let v = if p.is_flag() { v.round() } else if p == Param::Radius { v + 0.01 } else { v };
                Entry { day, action: Action::Set(p, v) }
            }),
            0..40,
        )
    }

    proptest! {
        #[test]
        fn apply_is_idempotent(entries in arb_schedule(), day in 0u32..450) {
            let s = Schedule::from_entries(entries);
            let base = EpidemicParams::default();
            let once = s.params_on(&base, day);
            prop_assert_eq!(s.params_on(&once, day), once);
        }

        #[test]
        fn distinct_params_commute(entries in arb_schedule(), day in 0u32..450) {
            let mut seen = alloc::collections::BTreeSet::new();
            let unique: Vec<Entry> = entries.into_iter().filter(|e| seen.insert((e.day, e.action.key()))).collect();
            let mut reversed = unique.clone();
            reversed.reverse();
            let base = EpidemicParams::default();
            prop_assert_eq!(
                Schedule::from_entries(unique).params_on(&base, day),
                Schedule::from_entries(reversed).params_on(&base, day)
            );
        }

        #[test]
        fn anticipation_respects_barrier(entries in arb_schedule()) {
            let s = Schedule::from_entries(entries);
            let m = s.anticipated(20, 245);
            for e in m.entries() {
                let was_post = s.entries().iter().any(|o| o.action == e.action && o.day >= 245 && (o.day - 20).max(245) == e.day);
                if was_post {
                    prop_assert!(e.day >= 245);
                }
            }
            prop_assert!(m.entries().iter().filter(|e| e.day < 245).count() == s.entries().iter().filter(|e| e.day < 245).count());
        }
    }
}
