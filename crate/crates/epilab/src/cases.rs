//! Readers for daily case count files.
//!
//! Two layouts are accepted: a plain `date,new_cases` file with ISO dates,
//! and the Italian civil protection regional release, where the date sits in
//! `data` (an ISO timestamp) and the count in `nuovi_positivi`. The regional
//! release lists every region per day, so a region name is needed whenever
//! more than one appears.

use chrono::NaiveDate;
use epilab_core::rt::{CaseKind, CaseSeries};

use crate::{Error, Result};

const WHAT: &str = "case file";

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn parse_date(field: &str, line: usize) -> Result<NaiveDate> {
    // Timestamps like 2020-03-01T17:00:00 keep only their date part.
    let day = field.trim().get(..10).unwrap_or(field.trim());
    NaiveDate::parse_from_str(day, "%Y-%m-%d").map_err(|e| Error::parse(WHAT, line, format!("date {field:?}: {e}")))
}

fn parse_count(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::parse(WHAT, line, format!("count {field:?}")))?;
    if !(v >= 0.0) {
        return Err(Error::parse(WHAT, line, format!("negative count {v}")));
    }
    Ok(v)
}

/// Reads either layout; `region` filters the regional release by
/// `denominazione_regione` and is ignored by the plain layout.
pub fn read_cases(text: &str, region: Option<&str>) -> Result<CaseSeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let (date_col, count_col, region_col) = if let Some(c) = column(&headers, "nuovi_positivi") {
        let d = column(&headers, "data").ok_or_else(|| Error::parse(WHAT, 1, "no `data` column"))?;
        (d, c, column(&headers, "denominazione_regione"))
    } else {
        let d = column(&headers, "date").ok_or_else(|| Error::parse(WHAT, 1, "expected `date` and `new_cases`"))?;
        let c = column(&headers, "new_cases").ok_or_else(|| Error::parse(WHAT, 1, "no `new_cases` column"))?;
        (d, c, None)
    };
    let mut rows = Vec::new();
    let mut seen_region: Option<String> = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if let Some(rc) = region_col {
            let name = rec.get(rc).unwrap_or("");
            match region {
                Some(want) if !name.eq_ignore_ascii_case(want) => continue,
                Some(_) => {}
                None => match &seen_region {
                    Some(r) if r != name => {
                        return Err(Error::parse(WHAT, line, "several regions present, choose one"));
                    }
                    Some(_) => {}
                    None => seen_region = Some(name.to_string()),
                },
            }
        }
        let date = parse_date(rec.get(date_col).unwrap_or(""), line)?;
        let count = parse_count(rec.get(count_col).unwrap_or(""), line)?;
        rows.push((date, count));
    }
    Ok(CaseSeries::from_dated(&rows, CaseKind::Notification)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_layout_with_gap() {
        let s = read_cases("date,new_cases\n2020-03-01,4\n2020-03-02,6\n2020-03-04,9\n", None).unwrap();
        assert_eq!(s.counts, vec![4.0, 6.0, 0.0, 9.0]);
        assert_eq!(s.filled, vec![2]);
        assert_eq!(s.start, NaiveDate::from_ymd_opt(2020, 3, 1).unwrap());
    }

    #[test]
    fn regional_layout() {
        let text = "data,stato,codice_regione,denominazione_regione,nuovi_positivi\n\
            2020-02-24T18:00:00,ITA,3,Lombardia,166\n\
            2020-02-24T18:00:00,ITA,1,Piemonte,0\n\
            2020-02-25T18:00:00,ITA,3,Lombardia,74\n\
            2020-02-25T18:00:00,ITA,1,Piemonte,0\n";
        let s = read_cases(text, Some("lombardia")).unwrap();
        assert_eq!(s.counts, vec![166.0, 74.0]);
        assert_eq!(s.kind, CaseKind::Notification);
        assert!(read_cases(text, None).is_err());
        let p = read_cases(text, Some("Piemonte")).unwrap();
        assert_eq!(p.counts, vec![0.0, 0.0]);
    }

    #[test]
    fn bad_rows() {
        assert!(read_cases("when,n\n2020-01-01,1\n", None).is_err());
        assert!(read_cases("date,new_cases\n2020-01-01,-3\n", None).is_err());
        assert!(read_cases("date,new_cases\n01/02/2020,3\n", None).is_err());
        assert!(read_cases("date,new_cases\n2020-01-02,3\n2020-01-01,3\n", None).is_err());
        assert!(read_cases("date,new_cases\n", None).is_err());
    }
}
