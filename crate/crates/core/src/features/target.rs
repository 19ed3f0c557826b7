//! Pendency targets: calendar durations bucketed into the five reporting
//! bands or the binary three-year split.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DAYS_PER_YEAR: f64 = 365.25;
pub const DAYS_PER_MONTH: f64 = 30.4375;

/// Exact calendar-day difference `decision - filing`.
pub fn duration_days(filing: NaiveDate, decision: NaiveDate) -> Result<u32> {
    let days = (decision - filing).num_days();
    if days < 0 {
        return Err(Error::NegativeDuration {
            filing: filing.to_string(),
            decision: decision.to_string(),
        });
    }
    Ok(days as u32)
}

pub fn days_to_months(days: u32) -> f64 {
    days as f64 / DAYS_PER_MONTH
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PendencyClass5 {
    #[serde(rename = "LT_1Y")]
    Lt1Y,
    #[serde(rename = "Y1_TO_3")]
    Y1To3,
    #[serde(rename = "GT3_TO_5")]
    Gt3To5,
    #[serde(rename = "GT5_TO_10")]
    Gt5To10,
    #[serde(rename = "GT_10Y")]
    Gt10Y,
}

impl PendencyClass5 {
    pub const ALL: [PendencyClass5; 5] = [
        PendencyClass5::Lt1Y,
        PendencyClass5::Y1To3,
        PendencyClass5::Gt3To5,
        PendencyClass5::Gt5To10,
        PendencyClass5::Gt10Y,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Report label, as printed in the confusion and metric tables.
    pub fn label(self) -> &'static str {
        match self {
            PendencyClass5::Lt1Y => "< 1 year",
            PendencyClass5::Y1To3 => "1 upto 3 years",
            PendencyClass5::Gt3To5 => "> 3 upto 5 years",
            PendencyClass5::Gt5To10 => "> 5 upto 10 years",
            PendencyClass5::Gt10Y => "> 10 years",
        }
    }
}

impl fmt::Display for PendencyClass5 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PendencyClass2 {
    #[serde(rename = "LT_3Y")]
    Lt3Y,
    #[serde(rename = "GE_3Y")]
    Ge3Y,
}

impl PendencyClass2 {
    pub const ALL: [PendencyClass2; 2] = [PendencyClass2::Lt3Y, PendencyClass2::Ge3Y];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            PendencyClass2::Lt3Y => "< 3 years",
            PendencyClass2::Ge3Y => "3 years and >",
        }
    }
}

fn check(days: Option<i64>) -> Result<Option<f64>> {
    match days {
        Some(d) if d < 0 => Err(Error::NegativeDays(d)),
        Some(d) => Ok(Some(d as f64)),
        None => Ok(None),
    }
}

/// Five-band target. `None` (ongoing case) lands in the last band.
///
/// Bands: `[0,1y)`, `[1y,3y]`, `(3y,5y]`, `(5y,10y]`, `(10y,inf)`.
pub fn target_multiclass(duration_days: Option<i64>) -> Result<PendencyClass5> {
    let Some(d) = check(duration_days)? else {
        return Ok(PendencyClass5::Gt10Y);
    };
    let y = DAYS_PER_YEAR;
    Ok(if d < y {
        PendencyClass5::Lt1Y
    } else if d <= 3.0 * y {
        PendencyClass5::Y1To3
    } else if d <= 5.0 * y {
        PendencyClass5::Gt3To5
    } else if d <= 10.0 * y {
        PendencyClass5::Gt5To10
    } else {
        PendencyClass5::Gt10Y
    })
}

/// Binary three-year target. Ongoing cases count as delayed.
pub fn target_binary(duration_days: Option<i64>) -> Result<PendencyClass2> {
    Ok(match check(duration_days)? {
        Some(d) if d < 3.0 * DAYS_PER_YEAR => PendencyClass2::Lt3Y,
        _ => PendencyClass2::Ge3Y,
    })
}

/// Which target a dataset is labelled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Multi5,
    Binary3y,
}

impl TargetKind {
    pub fn n_classes(self) -> usize {
        match self {
            TargetKind::Multi5 => 5,
            TargetKind::Binary3y => 2,
        }
    }

    pub fn class_labels(self) -> Vec<String> {
        match self {
            TargetKind::Multi5 => PendencyClass5::ALL.iter().map(|c| c.label().to_string()).collect(),
            TargetKind::Binary3y => PendencyClass2::ALL.iter().map(|c| c.label().to_string()).collect(),
        }
    }

    /// Class index for a case, or an error for decision-before-filing.
    pub fn label_of(self, filing: NaiveDate, decision: Option<NaiveDate>) -> Result<usize> {
        let days = decision
            .map(|d| duration_days(filing, d).map(i64::from))
            .transpose()?;
        Ok(match self {
            TargetKind::Multi5 => target_multiclass(days)?.index(),
            TargetKind::Binary3y => target_binary(days)?.index(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Datelike;
    use proptest::prelude::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    /// Independent day count: sum month lengths via the Gregorian leap rule.
    fn oracle_days(from: NaiveDate, to: NaiveDate) -> i64 {
        fn leap(y: i32) -> bool {
            (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
        }
        fn ordinal(date: NaiveDate) -> i64 {
            let lens = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
            let mut n: i64 = 0;
            for y in 1..date.year() {
                n += if leap(y) { 366 } else { 365 };
            }
            for m in 0..(date.month0() as usize) {
                n += lens[m] + i64::from(m == 1 && leap(date.year()));
            }
            n + i64::from(date.day())
        }
        ordinal(to) - ordinal(from)
    }

    #[test]
    fn durations() {
        assert_eq!(duration_days(d(2010, 1, 1), d(2010, 1, 1)).unwrap(), 0);
        assert_eq!(oracle_days(d(2010, 1, 1), d(2013, 1, 1)), 1096);
        assert_eq!(duration_days(d(2010, 1, 1), d(2013, 1, 1)).unwrap(), 1096);
        assert!(matches!(
            duration_days(d(2010, 3, 15), d(2010, 3, 14)),
            Err(Error::NegativeDuration { .. })
        ));
        assert!((days_to_months(1096) - 36.008_213_552_361_4).abs() < 1e-9);
    }

    #[test]
    fn multiclass_bands() {
        assert_eq!(target_multiclass(Some(200)).unwrap(), PendencyClass5::Lt1Y);
        assert_eq!(target_multiclass(None).unwrap(), PendencyClass5::Gt10Y);
        assert_eq!(target_multiclass(Some(1100)).unwrap(), PendencyClass5::Gt3To5);
        assert_eq!(target_multiclass(Some(365)).unwrap(), PendencyClass5::Lt1Y);
        assert_eq!(target_multiclass(Some(366)).unwrap(), PendencyClass5::Y1To3);
        assert_eq!(target_multiclass(Some(1095)).unwrap(), PendencyClass5::Y1To3);
        assert_eq!(target_multiclass(Some(1096)).unwrap(), PendencyClass5::Gt3To5);
        assert_eq!(target_multiclass(Some(1826)).unwrap(), PendencyClass5::Gt3To5);
        assert_eq!(target_multiclass(Some(1827)).unwrap(), PendencyClass5::Gt5To10);
        assert_eq!(target_multiclass(Some(3652)).unwrap(), PendencyClass5::Gt5To10);
        assert_eq!(target_multiclass(Some(3653)).unwrap(), PendencyClass5::Gt10Y);
        assert!(target_multiclass(Some(-1)).is_err());
    }

    #[test]
    fn binary_bands() {
        let median = (31.0 * DAYS_PER_MONTH).round() as i64;
        assert_eq!(median, 944);
        assert_eq!(target_binary(Some(median)).unwrap(), PendencyClass2::Lt3Y);
        assert_eq!(target_binary(Some(1095)).unwrap(), PendencyClass2::Lt3Y);
        assert_eq!(target_binary(Some(1096)).unwrap(), PendencyClass2::Ge3Y);
        assert_eq!(target_binary(None).unwrap(), PendencyClass2::Ge3Y);
        assert!(target_binary(Some(-5)).is_err());
    }

    proptest! {
        #[test]
        fn day_count_matches_oracle(a in 0i64..40_000, b in 0i64..40_000) {
            let base = d(1950, 1, 1);
            let (x, y) = (base + chrono::Duration::days(a.min(b)), base + chrono::Duration::days(a.max(b)));
            prop_assert_eq!(i64::from(duration_days(x, y).unwrap()), oracle_days(x, y));
        }

        #[test]
        fn targets_agree_on_coarse_boundary(days in proptest::option::of(0i64..6000)) {
            let five = target_multiclass(days).unwrap();
            let two = target_binary(days).unwrap();
            if two == PendencyClass2::Lt3Y {
                prop_assert!(five <= PendencyClass5::Y1To3);
            }
            if five >= PendencyClass5::Gt3To5 {
                prop_assert_eq!(two, PendencyClass2::Ge3Y);
            }
        }
    }
}
