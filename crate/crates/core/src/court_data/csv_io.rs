//! Reading and writing case files (RFC 4180 CSV, UTF-8, header row).

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::record::{
    case_schema, format_iso_date, parse_iso_date, CaseRecord, Column, CASE_ID, DATE_OF_DECISION,
    DATE_OF_FILING,
};
use crate::error::{Error, Result};

/// A data row that could not be turned into a [`CaseRecord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based data row number (header excluded).
    pub row: usize,
    pub cause: String,
}

#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub records: Vec<CaseRecord>,
    pub errors: Vec<RowError>,
}

fn cell(value: &str) -> Option<String> {
    if value.is_empty() {
        None
    } else {
        Some(value.to_string())
    }
}

/// Parse a case file.
///
/// Every name in `schema` must appear in the header, otherwise the whole
/// file is rejected. Extra columns are ignored. Record fields whose column
/// is absent from the header are read as missing.
pub fn parse_case_csv<R: Read>(source: R, schema: &[&str]) -> Result<ParseOutcome> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header = reader.headers()?.clone();
    let position: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h, i)).collect();
    if let Some(missing) = schema.iter().find(|c| !position.contains_key(**c)) {
        return Err(Error::MissingColumn(missing.to_string()));
    }

    let id_at = position.get(CASE_ID).copied();
    let filing_at = position.get(DATE_OF_FILING).copied();
    let decision_at = position.get(DATE_OF_DECISION).copied();
    let cat_at: Vec<Option<usize>> = Column::ALL
        .iter()
        .map(|c| position.get(c.name()).copied())
        .collect();

    let mut out = ParseOutcome::default();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                out.errors.push(RowError {
                    row: row_no,
                    cause: e.to_string(),
                });
                continue;
            }
        };
        if row.len() != header.len() {
            out.errors.push(RowError {
                row: row_no,
                cause: format!("expected {} fields, found {}", header.len(), row.len()),
            });
            continue;
        }
        let get = |at: Option<usize>| at.and_then(|i| row.get(i)).unwrap_or("");

        let case_id = get(id_at);
        if case_id.is_empty() {
            out.errors.push(RowError {
                row: row_no,
                cause: "empty case_id".into(),
            });
            continue;
        }
        let filing_raw = get(filing_at);
        let Some(filing) = parse_iso_date(filing_raw) else {
            out.errors.push(RowError {
                row: row_no,
                cause: format!("unparseable date_of_filing `{filing_raw}`"),
            });
            continue;
        };
        let decision_raw = get(decision_at);
        let decision = if decision_raw.is_empty() {
            None
        } else {
            match parse_iso_date(decision_raw) {
                Some(d) => Some(d),
                None => {
                    out.errors.push(RowError {
                        row: row_no,
                        cause: format!("unparseable date_of_decision `{decision_raw}`"),
                    });
                    continue;
                }
            }
        };

        let mut record = CaseRecord::new(case_id, filing);
        record.date_of_decision = decision;
        for (col, at) in Column::ALL.iter().zip(&cat_at) {
            record.set(*col, cell(get(*at)));
        }
        out.records.push(record);
    }
    Ok(out)
}

/// Write records with the full case header. Missing values become empty cells.
pub fn write_case_csv<W: Write>(records: &[CaseRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(case_schema())?;
    let mut fields: Vec<String> = Vec::with_capacity(19);
    for r in records {
        fields.clear();
        fields.push(r.case_id.clone());
        fields.push(format_iso_date(r.date_of_filing));
        fields.push(r.date_of_decision.map(format_iso_date).unwrap_or_default());
        for c in Column::ALL {
            fields.push(r.get(c).unwrap_or("").to_string());
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Auxiliary metadata keyed by `case_id` (judge gender, act, section, ...).
#[derive(Debug, Clone, Default)]
pub struct AuxTable {
    pub columns: Vec<Column>,
    pub rows: Vec<(String, Vec<Option<String>>)>,
}

impl AuxTable {
    pub fn new(columns: Vec<Column>) -> Self {
        AuxTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, case_id: &str, values: Vec<Option<String>>) {
        self.rows.push((case_id.to_string(), values));
    }

    /// Read an auxiliary CSV. It must carry `case_id`; columns that are not
    /// categorical case columns are ignored.
    pub fn from_csv<R: Read>(source: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(source);
        let header = reader.headers()?.clone();
        let id_at = header
            .iter()
            .position(|h| h == CASE_ID)
            .ok_or_else(|| Error::MissingColumn(CASE_ID.into()))?;
        let mut picked = Vec::new();
        for (i, h) in header.iter().enumerate() {
            if let Ok(c) = h.parse::<Column>() {
                picked.push((i, c));
            }
        }
        let mut table = AuxTable::new(picked.iter().map(|(_, c)| *c).collect());
        for row in reader.records() {
            let row = row?;
            let id = row.get(id_at).unwrap_or("");
            let values = picked
                .iter()
                .map(|(i, _)| cell(row.get(*i).unwrap_or("")))
                .collect();
            table.push(id, values);
        }
        Ok(table)
    }
}

/// Left-outer join of `aux` onto `records` by `case_id`. Non-empty aux
/// values overwrite the record's value; empty aux cells leave it alone.
pub fn join_metadata(mut records: Vec<CaseRecord>, aux: &AuxTable) -> Result<Vec<CaseRecord>> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, (id, _)) in aux.rows.iter().enumerate() {
        if index.insert(id.as_str(), i).is_some() {
            return Err(Error::DuplicateKey(id.clone()));
        }
    }
    for record in &mut records {
        if let Some(&i) = index.get(record.case_id.as_str()) {
            for (col, value) in aux.columns.iter().zip(&aux.rows[i].1) {
                if let Some(v) = value {
                    record.set(*col, Some(v.clone()));
                }
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn header() -> String {
        case_schema().join(",")
    }

    fn full_row(id: &str, decision: &str) -> String {
        let mut cells = vec![id.to_string(), "2010-03-01".into(), decision.to_string()];
        cells.extend(Column::ALL.iter().map(|c| format!("v_{}", c.name())));
        cells.join(",")
    }

    #[test]
    fn one_well_formed_row() {
        let csv = format!("{}\n{}\n", header(), full_row("C1", "2011-01-01"));
        let out = parse_case_csv(csv.as_bytes(), &case_schema()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert!(out.errors.is_empty());
        let r = &out.records[0];
        assert_eq!(r.get(Column::Act), Some("v_act"));
        assert_eq!(r.date_of_decision, NaiveDate::from_ymd_opt(2011, 1, 1));
    }

    #[test]
    fn empty_decision_is_ongoing() {
        let csv = format!("{}\n{}\n", header(), full_row("C1", ""));
        let out = parse_case_csv(csv.as_bytes(), &case_schema()).unwrap();
        assert!(out.records[0].is_ongoing());
    }

    #[test]
    fn missing_column_is_fatal() {
        let h: Vec<_> = case_schema()
            .into_iter()
            .filter(|c| *c != "type_name")
            .collect();
        let csv = format!("{}\n", h.join(","));
        match parse_case_csv(csv.as_bytes(), &case_schema()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "type_name"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn bad_rows_are_reported() {
        let mut bad_date = full_row("C2", "2011-01-01");
        bad_date = bad_date.replacen("2010-03-01", "03/01/2010", 1);
        let csv = format!(
            "{}\n{}\n{}\nC3,2010-01-01\n{}\n",
            header(),
            full_row("C1", ""),
            bad_date,
            full_row("C4", "2012-13-01"),
        );
        let out = parse_case_csv(csv.as_bytes(), &case_schema()).unwrap();
        assert_eq!(out.records.len(), 1);
        let rows: Vec<usize> = out.errors.iter().map(|e| e.row).collect();
        assert_eq!(rows, vec![2, 3, 4]);
        assert!(out.errors[0].cause.contains("date_of_filing"));
        assert!(out.errors[2].cause.contains("date_of_decision"));
    }

    #[test]
    fn extra_columns_ignored_and_empty_cells_missing() {
        let csv = format!("extra,{}\nx,{}\n", header(), full_row("C1", ""))
            .replace("v_section", "");
        let out = parse_case_csv(csv.as_bytes(), &case_schema()).unwrap();
        assert_eq!(out.records[0].get(Column::Section), None);
        assert_eq!(out.records[0].get(Column::StateCode), Some("v_state_code"));
    }

    fn rec(id: &str) -> CaseRecord {
        CaseRecord::new(id, NaiveDate::from_ymd_opt(2010, 1, 1).unwrap()).with(Column::Act, "old")
    }

    #[test]
    fn join_overlays_matching_rows() {
        let mut aux = AuxTable::new(vec![Column::Act, Column::Section]);
        aux.push("C1", vec![Some("ipc".into()), Some("302".into())]);
        aux.push("C3", vec![Some("crpc".into()), None]);
        let out = join_metadata(vec![rec("C1"), rec("C2"), rec("C3")], &aux).unwrap();
        assert_eq!(out[0].get(Column::Act), Some("ipc"));
        assert_eq!(out[0].get(Column::Section), Some("302"));
        assert_eq!(out[1], rec("C2"));
        assert_eq!(out[2].get(Column::Act), Some("crpc"));
        assert_eq!(out[2].get(Column::Section), None);
    }

    #[test]
    fn join_with_empty_aux_is_identity() {
        let records = vec![rec("C1"), rec("C2")];
        let out = join_metadata(records.clone(), &AuxTable::default()).unwrap();
        assert_eq!(out, records);
    }

    #[test]
    fn join_rejects_duplicate_keys() {
        let mut aux = AuxTable::new(vec![Column::Act]);
        aux.push("C1", vec![Some("a".into())]);
        aux.push("C1", vec![Some("b".into())]);
        match join_metadata(vec![rec("C1")], &aux) {
            Err(Error::DuplicateKey(k)) => assert_eq!(k, "C1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn aux_from_csv() {
        let csv = "case_id,act,tenure\nC1,ipc,3\nC2,,4\n";
        let aux = AuxTable::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(aux.columns, vec![Column::Act]);
        assert_eq!(aux.rows[1].1, vec![None]);
    }
}
