use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::record::{CaseRecord, NOT_AVAILABLE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanStats {
    pub rows_in: usize,
    pub rows_kept: usize,
    pub dropped_discrepant_dates: usize,
    pub dropped_pre_cutoff: usize,
    /// `rows_kept / rows_in`, 0 for empty input.
    pub kept_fraction: f64,
}

pub fn default_cutoff() -> NaiveDate {
    NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid date")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Keep,
    Discrepant,
    PreCutoff,
}

fn judge(r: &CaseRecord, cutoff: NaiveDate) -> Verdict {
    if let Some(decision) = r.date_of_decision {
        if decision < r.date_of_filing {
            return Verdict::Discrepant;
        }
    }
    let early = r.date_of_filing < cutoff || r.date_of_decision.is_some_and(|d| d < cutoff);
    if early {
        Verdict::PreCutoff
    } else {
        Verdict::Keep
    }
}

/// Drop rows whose decision precedes filing, then rows with a filing or
/// decision date before `cutoff`. Each dropped row is counted once, under
/// the first rule it violates.
pub fn clean(records: Vec<CaseRecord>, cutoff: NaiveDate) -> (Vec<CaseRecord>, CleanStats) {
    let rows_in = records.len();
    let mut stats = CleanStats {
        rows_in,
        rows_kept: 0,
        dropped_discrepant_dates: 0,
        dropped_pre_cutoff: 0,
        kept_fraction: 0.0,
    };
    let kept: Vec<CaseRecord> = records
        .into_iter()
        .filter(|r| match judge(r, cutoff) {
            Verdict::Keep => true,
            Verdict::Discrepant => {
                stats.dropped_discrepant_dates += 1;
                false
            }
            Verdict::PreCutoff => {
                stats.dropped_pre_cutoff += 1;
                false
            }
        })
        .collect();
    stats.rows_kept = kept.len();
    if rows_in > 0 {
        stats.kept_fraction = stats.rows_kept as f64 / rows_in as f64;
    }
    (kept, stats)
}

/// Replace every missing or empty categorical cell with `"Not Available"`.
/// Dates are left untouched.
pub fn impute_missing(mut records: Vec<CaseRecord>) -> Vec<CaseRecord> {
    for r in &mut records {
        for cell in r.categorical.iter_mut() {
            if cell.as_deref().is_none_or(str::is_empty) {
                *cell = Some(NOT_AVAILABLE.to_string());
            }
        }
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::court_data::record::Column;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn drop_rules() {
        let discrepant = CaseRecord::new("A", d(2010, 5, 1)).with_decision(d(2010, 4, 1));
        let early = CaseRecord::new("B", d(2009, 12, 31));
        let ongoing = CaseRecord::new("C", d(2010, 1, 1));
        // Both rules violated: counted as discrepant only.
        let both = CaseRecord::new("D", d(2009, 6, 1)).with_decision(d(2009, 1, 1));
        let (kept, stats) = clean(vec![discrepant, early, ongoing.clone(), both], default_cutoff());
        assert_eq!(kept, vec![ongoing]);
        assert_eq!(stats.dropped_discrepant_dates, 2);
        assert_eq!(stats.dropped_pre_cutoff, 1);
        assert_eq!(stats.rows_kept, 1);
        assert_eq!(stats.kept_fraction, 0.25);
    }

    #[test]
    fn empty_input() {
        let (kept, stats) = clean(vec![], default_cutoff());
        assert!(kept.is_empty());
        assert_eq!(stats.kept_fraction, 0.0);
    }

    #[test]
    fn imputation() {
        let r = CaseRecord::new("A", d(2010, 1, 2)).with(Column::Section, "");
        let out = impute_missing(vec![r]);
        assert_eq!(out[0].get(Column::Section), Some(NOT_AVAILABLE));
        assert!(out[0].categorical.iter().all(|c| c.as_deref() == Some(NOT_AVAILABLE)));
        assert!(out[0].date_of_decision.is_none());

        let mut full = CaseRecord::new("B", d(2010, 1, 2)).with_decision(d(2011, 1, 1));
        for c in Column::ALL {
            full.set(c, Some(format!("x{}", c.index())));
        }
        assert_eq!(impute_missing(vec![full.clone()]), vec![full]);
    }

    fn arb_record() -> impl Strategy<Value = CaseRecord> {
        (0i64..6000, proptest::option::of(-400i64..5000)).prop_map(|(f, dur)| {
            let filing = d(2005, 1, 1) + chrono::Duration::days(f);
            let mut r = CaseRecord::new("x", filing);
            r.date_of_decision = dur.map(|x| filing + chrono::Duration::days(x));
            r
        })
    }

    proptest! {
        #[test]
        fn stats_account_for_every_row(rs in proptest::collection::vec(arb_record(), 0..60)) {
            let (kept, s) = clean(rs.clone(), default_cutoff());
            prop_assert_eq!(s.rows_kept + s.dropped_discrepant_dates + s.dropped_pre_cutoff, s.rows_in);
            prop_assert_eq!(kept.len(), s.rows_kept);
            let (again, s2) = clean(kept.clone(), default_cutoff());
            prop_assert_eq!(again, kept);
            prop_assert_eq!(s2.rows_kept, s2.rows_in);
        }
    }
}
