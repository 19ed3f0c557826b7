use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Token written in place of any missing categorical value.
pub const NOT_AVAILABLE: &str = "Not Available";

/// The sixteen categorical (non-date) columns of a case record, in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    StateCode,
    DistCode,
    CourtNo,
    JudgePosition,
    FemaleJudgeFiling,
    FemaleJudgeDecision,
    FemaleAdvPet,
    FemaleAdvDef,
    FemalePetitioner,
    FemaleDefendant,
    TypeName,
    Section,
    Act,
    Criminal,
    NumberSectionsIpc,
    BailableIpc,
}

impl Column {
    pub const ALL: [Column; 16] = [
        Column::StateCode,
        Column::DistCode,
        Column::CourtNo,
        Column::JudgePosition,
        Column::FemaleJudgeFiling,
        Column::FemaleJudgeDecision,
        Column::FemaleAdvPet,
        Column::FemaleAdvDef,
        Column::FemalePetitioner,
        Column::FemaleDefendant,
        Column::TypeName,
        Column::Section,
        Column::Act,
        Column::Criminal,
        Column::NumberSectionsIpc,
        Column::BailableIpc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::StateCode => "state_code",
            Column::DistCode => "dist_code",
            Column::CourtNo => "court_no",
            Column::JudgePosition => "judge_position",
            Column::FemaleJudgeFiling => "female_judge_filing",
            Column::FemaleJudgeDecision => "female_judge_decision",
            Column::FemaleAdvPet => "female_adv_pet",
            Column::FemaleAdvDef => "female_adv_def",
            Column::FemalePetitioner => "female_petitioner",
            Column::FemaleDefendant => "female_defendant",
            Column::TypeName => "type_name",
            Column::Section => "section",
            Column::Act => "act",
            Column::Criminal => "criminal",
            Column::NumberSectionsIpc => "number_sections_ipc",
            Column::BailableIpc => "bailable_ipc",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_geographic(self) -> bool {
        matches!(self, Column::StateCode | Column::DistCode | Column::CourtNo)
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Column {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Column::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown column `{s}`"))
    }
}

pub const CASE_ID: &str = "case_id";
pub const DATE_OF_FILING: &str = "date_of_filing";
pub const DATE_OF_DECISION: &str = "date_of_decision";

/// Full header of a case file: `case_id`, the two dates, then the
/// categorical columns.
pub fn case_schema() -> Vec<&'static str> {
    let mut cols = vec![CASE_ID, DATE_OF_FILING, DATE_OF_DECISION];
    cols.extend(Column::ALL.iter().map(|c| c.name()));
    cols
}

/// One lower-court case with its filing-time attributes and outcome dates.
///
/// Categorical values are raw tokens; `None` means the cell was empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub date_of_filing: NaiveDate,
    /// `None` for ongoing cases.
    pub date_of_decision: Option<NaiveDate>,
    pub categorical: [Option<String>; 16],
}

impl CaseRecord {
    pub fn new(case_id: impl Into<String>, date_of_filing: NaiveDate) -> Self {
        CaseRecord {
            case_id: case_id.into(),
            date_of_filing,
            date_of_decision: None,
            categorical: Default::default(),
        }
    }

    pub fn get(&self, column: Column) -> Option<&str> {
        self.categorical[column.index()].as_deref()
    }

    pub fn set(&mut self, column: Column, value: Option<String>) {
        self.categorical[column.index()] = value;
    }

    pub fn with(mut self, column: Column, value: &str) -> Self {
        self.set(column, Some(value.to_string()));
        self
    }

    pub fn with_decision(mut self, date: NaiveDate) -> Self {
        self.date_of_decision = Some(date);
        self
    }

    /// Value used by encoders: missing or empty cells read as [`NOT_AVAILABLE`].
    pub fn token(&self, column: Column) -> &str {
        match self.get(column) {
            Some(v) if !v.is_empty() => v,
            _ => NOT_AVAILABLE,
        }
    }

    pub fn is_ongoing(&self) -> bool {
        self.date_of_decision.is_none()
    }
}

/// Strict ISO-8601 `YYYY-MM-DD`.
pub fn parse_iso_date(s: &str) -> Option<NaiveDate> {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return None;
    }
    let digits = |r: std::ops::Range<usize>| b[r].iter().all(u8::is_ascii_digit);
    if !(digits(0..4) && digits(5..7) && digits(8..10)) {
        return None;
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

pub fn format_iso_date(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_dates() {
        assert_eq!(
            parse_iso_date("2010-05-01"),
            NaiveDate::from_ymd_opt(2010, 5, 1)
        );
        assert_eq!(parse_iso_date("2010-5-01"), None);
        assert_eq!(parse_iso_date("01/05/2010"), None);
        assert_eq!(parse_iso_date("2010-02-30"), None);
        assert_eq!(parse_iso_date(""), None);
    }

    #[test]
    fn column_names_round_trip() {
        for c in Column::ALL {
            assert_eq!(c.name().parse::<Column>().unwrap(), c);
        }
        assert_eq!(case_schema().len(), 19);
    }

    #[test]
    fn token_falls_back() {
        let d = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        let r = CaseRecord::new("C1", d).with(Column::Act, "");
        assert_eq!(r.token(Column::Act), NOT_AVAILABLE);
        assert_eq!(r.token(Column::Section), NOT_AVAILABLE);
    }
}
