//! End-to-end runs on a small town: scripts, replications, selection and
//! the emitters working together.

use epilab_core::batch::{run_seed, run_single, select_second_wave, summarize, RunSummary, SelectionCriteria, StdKind};
use epilab_core::calendar::{checkpoint_days, day_to_date, CHECKPOINT_LABELS};
use epilab_core::engine::StopRule;
use epilab_core::params::EpidemicParams;
use epilab_core::script::{parse_script, Scenario};
use epilab_core::viz::{emit_heatmap, emit_sequence, SequenceStyle};
use epilab_core::world::WorldConfig;

fn town() -> WorldConfig {
    WorldConfig { population: 435, census: [13, 8, 24, 156, 118, 26, 90], open_spaces: 4, ..WorldConfig::default() }
}

fn summaries(scenario: Scenario, base: u64, n: u64) -> Vec<RunSummary> {
    let schedule = scenario.schedule();
    (0..n)
        .map(|i| {
            let rec = run_single(&town(), &EpidemicParams::default(), &schedule, run_seed(base, i), &StopRule::default())
                .unwrap();
            RunSummary::from(&rec)
        })
        .collect()
}

#[test]
fn bundled_scripts_survive_a_round_trip() {
    for s in Scenario::ALL {
        let schedule = s.schedule();
        let again = parse_script(&schedule.to_script()).unwrap();
        assert_eq!(again, schedule, "{s}");
    }
}

#[test]
fn checkpoints_agree_with_the_daily_series() {
    let schedule = Scenario::SecondWaveMeasures.schedule();
    let rec = run_single(&town(), &EpidemicParams::default(), &schedule, 5, &StopRule::default()).unwrap();
    let mut last = (0, 0);
    for row in &rec.daily {
        assert!(row.cum_symptomatic >= last.0 && row.cum_total >= last.1);
        assert!(row.cum_symptomatic <= row.cum_total);
        last = (row.cum_symptomatic, row.cum_total);
    }
    assert_eq!(last, (rec.cum_symptomatic, rec.cum_total));
    for (k, day) in checkpoint_days().into_iter().enumerate() {
        match rec.checkpoints[k] {
            Some(snap) => {
                let row = rec.daily.iter().find(|r| r.day == day).expect(CHECKPOINT_LABELS[k]);
                assert_eq!((snap.cum_symptomatic, snap.cum_total), (row.cum_symptomatic, row.cum_total));
            }
            None => assert!(rec.duration < day),
        }
    }
    assert!(day_to_date(rec.duration).is_ok());
}

#[test]
fn replications_repeat_and_feed_the_emitters() {
    let a = summaries(Scenario::ForcedSecondWave, 300, 8);
    let b = summaries(Scenario::ForcedSecondWave, 300, 8);
    assert_eq!(a, b);

    let picked = select_second_wave(&a, &SelectionCriteria::default()).unwrap();
    assert!(picked.stage2.iter().all(|r| picked.stage1.contains(r)));

    let table = summarize(&a, StdKind::Sample).unwrap();
    assert!(!table.is_empty());

    let (grid, svg) = emit_heatmap(&a, 10, 10).unwrap();
    assert_eq!(grid.total(), a.len() as u64);
    assert!(svg.starts_with("<svg"));

    let schedule = Scenario::NoContainment.schedule();
    let rec = run_single(&town(), &EpidemicParams::default(), &schedule, 1, &StopRule::default()).unwrap();
    let svg = emit_sequence(&rec.events, Some(40), &SequenceStyle::default()).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}
