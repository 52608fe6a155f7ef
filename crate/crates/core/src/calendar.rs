//! Simulation day numbering. Day 1 is 2020-02-04.

use chrono::NaiveDate;

use crate::{Error, Result};

/// Calendar date of simulation day 1.
pub fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 2, 4).expect("valid epoch")
}

/// Converts a simulation day (1-based) to its calendar date.
pub fn day_to_date(day: u32) -> Result<NaiveDate> {
    if day < 1 {
        return Err(Error::DayOutOfRange(day as i64));
    }
    epoch()
        .checked_add_days(chrono::Days::new(u64::from(day - 1)))
        .ok_or(Error::DayOutOfRange(day as i64))
}

/// Converts a calendar date to its simulation day.
pub fn date_to_day(date: NaiveDate) -> Result<u32> {
    let offset = date.signed_duration_since(epoch()).num_days() + 1;
    if offset < 1 || offset > i64::from(u32::MAX) {
        return Err(Error::DayOutOfRange(offset));
    }
    Ok(offset as u32)
}

/// Simulation day for a `(year, month, day)` triple.
pub fn day_of(year: i32, month: u32, day: u32) -> u32 {
    let date = NaiveDate::from_ymd_opt(year, month, day).expect("valid calendar date");
    date_to_day(date).expect("date after epoch")
}

/// Checkpoint dates used by the batch statistics, in chronological order.
pub const CHECKPOINT_DATES: [(i32, u32, u32); 5] = [
    (2020, 6, 1),
    (2020, 9, 20),
    (2020, 12, 15),
    (2021, 2, 1),
    (2021, 5, 1),
];

/// Checkpoint labels matching [`CHECKPOINT_DATES`].
pub const CHECKPOINT_LABELS: [&str; 5] = ["jun1", "sep20", "dec15", "feb1", "may1"];

/// Simulation days of the five checkpoints.
pub fn checkpoint_days() -> [u32; 5] {
    CHECKPOINT_DATES.map(|(y, m, d)| day_of(y, m, d))
}

/// Last day on which no new measure may be planned (2020-10-05).
pub fn barrier_day() -> u32 {
    day_of(2020, 10, 5)
}

/// Day on which vaccinations start in the planning experiments.
///
/// The published calendar maps 2021-02-12 to day 375; the vaccination tables
/// use day 373 and that value is kept verbatim.
pub const VACCINATION_START_DAY: u32 = 373;

/// Days between a first dose and its effectiveness.
pub const VACCINE_EFFECT_DELAY: u32 = 40;

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, dd: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, dd).unwrap()
    }

    #[test]
    fn published_table_rows() {
        let rows = [
            (25, d(2020, 2, 28)),
            (50, d(2020, 3, 24)),
            (125, d(2020, 6, 7)),
            (225, d(2020, 9, 15)),
            (250, d(2020, 10, 10)),
            (325, d(2020, 12, 24)),
            (375, d(2021, 2, 12)),
            (425, d(2021, 4, 3)),
            (550, d(2021, 8, 6)),
            (700, d(2022, 1, 3)),
        ];
        for (day, date) in rows {
            assert_eq!(day_to_date(day).unwrap(), date, "day {day}");
            assert_eq!(date_to_day(date).unwrap(), day);
        }
    }

    #[test]
    fn day_one_is_epoch() {
        assert_eq!(day_to_date(1).unwrap(), d(2020, 2, 4));
    }

    #[test]
    fn day_zero_rejected() {
        assert_eq!(day_to_date(0), Err(Error::DayOutOfRange(0)));
        assert!(date_to_day(d(2020, 2, 3)).is_err());
    }

    #[test]
    fn round_trip_first_thousand_days() {
        for day in 1..=1000 {
            assert_eq!(date_to_day(day_to_date(day).unwrap()).unwrap(), day);
        }
    }

    #[test]
    fn checkpoints_and_barrier() {
        assert_eq!(checkpoint_days(), [119, 230, 316, 364, 453]);
        assert_eq!(barrier_day(), 245);
        assert_eq!(day_of(2020, 9, 1), 211);
    }
}
