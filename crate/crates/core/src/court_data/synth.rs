//! Synthetic case files in the real schema, with a planted signal.
//!
//! Each row gets a key class `k` drawn from `class_prior`. The planted
//! columns (`state_code`, `type_name`, `act`) carry `k` jointly: every value
//! of a planted column belongs to one of five score groups (a seeded
//! permutation, so groups are scattered in code order), and `k` is the band
//! of the summed scores. The true class equals `k` with probability
//! `signal_strength` and is otherwise uniform over the other four classes,
//! so the Bayes rule (predict `k`) is right with probability
//! `signal_strength` whenever that exceeds `(1 - s) / 4`. Ongoing rows are
//! forced to key and class `GT_10Y`. Durations are uniform inside the true
//! class's day band.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{CaseRecord, Column};
use crate::error::{Error, Result};
use crate::features::target::PendencyClass5;
use crate::rng::{stream_rng, STREAM_SYNTH_GROUPS, STREAM_SYNTH_ONGOING, STREAM_SYNTH_ROW};

pub const PLANTED: [Column; 3] = [Column::StateCode, Column::TypeName, Column::Act];
const N_CLASSES: usize = PendencyClass5::ALL.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub seed: u64,
    /// Distribution of the key class over the five pendency bands.
    pub class_prior: Vec<f64>,
    pub signal_strength: f64,
    /// Number of distinct values per column; unlisted columns use defaults.
    pub cardinalities: BTreeMap<Column, usize>,
    pub ongoing_fraction: f64,
}

impl SyntheticSpec {
    pub fn new(n_rows: usize, seed: u64) -> Self {
        SyntheticSpec {
            n_rows,
            seed,
            class_prior: vec![0.30, 0.30, 0.15, 0.15, 0.10],
            signal_strength: 0.85,
            cardinalities: BTreeMap::new(),
            ongoing_fraction: 0.05,
        }
    }

    pub fn cardinality(&self, column: Column) -> usize {
        self.cardinalities
            .get(&column)
            .copied()
            .unwrap_or_else(|| default_cardinality(column))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSynthetic(m));
        if self.class_prior.len() != N_CLASSES {
            return bad(format!("class_prior needs {N_CLASSES} entries"));
        }
        if self.class_prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return bad("class_prior entries must be finite and >= 0".into());
        }
        let total: f64 = self.class_prior.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("class_prior sums to {total}, not 1"));
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return bad("signal_strength must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.ongoing_fraction) {
            return bad("ongoing_fraction must lie in [0, 1]".into());
        }
        for c in Column::ALL {
            let card = self.cardinality(c);
            if card == 0 {
                return bad(format!("cardinality of {c} must be >= 1"));
            }
            if PLANTED.contains(&c) && card < N_CLASSES {
                return bad(format!("planted column {c} needs at least {N_CLASSES} values"));
            }
        }
        Ok(())
    }
}

pub fn default_cardinality(column: Column) -> usize {
    match column {
        Column::StateCode => 12,
        Column::DistCode => 40,
        Column::CourtNo => 60,
        Column::JudgePosition => 8,
        Column::TypeName => 15,
        Column::Section => 30,
        Column::Act => 20,
        Column::NumberSectionsIpc => 6,
        Column::FemaleJudgeFiling
        | Column::FemaleJudgeDecision
        | Column::FemaleAdvPet
        | Column::FemaleAdvDef
        | Column::FemalePetitioner
        | Column::FemaleDefendant => 3,
        Column::Criminal | Column::BailableIpc => 2,
    }
}

fn token(column: Column, v: usize) -> String {
    const GENDER: [&str; 3] = ["0", "1", "-9998"];
    match column {
        Column::StateCode | Column::DistCode | Column::CourtNo => (v + 1).to_string(),
        Column::NumberSectionsIpc | Column::Criminal | Column::BailableIpc => v.to_string(),
        Column::FemaleJudgeFiling
        | Column::FemaleJudgeDecision
        | Column::FemaleAdvPet
        | Column::FemaleAdvDef
        | Column::FemalePetitioner
        | Column::FemaleDefendant => match GENDER.get(v) {
            Some(t) => t.to_string(),
            None => format!("g{v}"),
        },
        Column::JudgePosition => format!("judge_pos_{v}"),
        Column::TypeName => format!("type_{v}"),
        Column::Section => format!("sec_{v}"),
        Column::Act => format!("act_{v}"),
    }
}

/// Band of a summed score (0..=12) of three planted groups.
fn key_of_score(score: usize) -> usize {
    (score * N_CLASSES / 13).min(N_CLASSES - 1)
}

/// Inclusive day range of a decided case in class `c`.
fn day_band(c: usize) -> (i64, i64) {
    match c {
        0 => (0, 365),
        1 => (366, 1095),
        2 => (1096, 1826),
        3 => (1827, 3652),
        _ => (3653, 4017),
    }
}

struct Plan {
    /// Per planted column: value indices for each score group.
    group_values: Vec<Vec<Vec<usize>>>,
    /// Per key class: admissible (g_state, g_type, g_act) triples.
    triples: Vec<Vec<[usize; 3]>>,
    cards: Vec<usize>,
}

impl Plan {
    fn new(spec: &SyntheticSpec) -> Self {
        let cards: Vec<usize> = Column::ALL.iter().map(|c| spec.cardinality(*c)).collect();
        let group_values = PLANTED
            .iter()
            .map(|col| {
                let card = cards[col.index()];
                let mut perm: Vec<usize> = (0..card).collect();
                perm.shuffle(&mut stream_rng(spec.seed, STREAM_SYNTH_GROUPS, col.index() as u64));
                let mut groups = vec![Vec::new(); N_CLASSES];
                for (rank, &v) in perm.iter().enumerate() {
                    groups[rank * N_CLASSES / card].push(v);
                }
                for g in &mut groups {
                    g.sort_unstable();
                }
                groups
            })
            .collect();
        let mut triples = vec![Vec::new(); N_CLASSES];
        for a in 0..N_CLASSES {
            for b in 0..N_CLASSES {
                for c in 0..N_CLASSES {
                    triples[key_of_score(a + b + c)].push([a, b, c]);
                }
            }
        }
        Plan {
            group_values,
            triples,
            cards,
        }
    }
}

fn draw_class<R: Rng>(rng: &mut R, prior: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in prior.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding slack: fall back to the last class with mass.
    prior.iter().rposition(|p| *p > 0.0).unwrap_or(prior.len() - 1)
}

fn make_row(spec: &SyntheticSpec, plan: &Plan, i: usize, ongoing: bool) -> CaseRecord {
    let mut rng = stream_rng(spec.seed, STREAM_SYNTH_ROW, i as u64);
    let (key, class) = if ongoing {
        (N_CLASSES - 1, N_CLASSES - 1)
    } else {
        let key = draw_class(&mut rng, &spec.class_prior);
        let class = if rng.gen::<f64>() < spec.signal_strength {
            key
        } else {
            let other = rng.gen_range(0..N_CLASSES - 1);
            if other >= key {
                other + 1
            } else {
                other
            }
        };
        (key, class)
    };

    let filing = NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid") + Duration::days(rng.gen_range(0..365));
    let mut record = CaseRecord::new(format!("SYN{i:08}"), filing);
    if !ongoing {
        let (lo, hi) = day_band(class);
        record.date_of_decision = Some(filing + Duration::days(rng.gen_range(lo..=hi)));
    }

    let options = &plan.triples[key];
    let triple = options[rng.gen_range(0..options.len())];
    for col in Column::ALL {
        let v = match PLANTED.iter().position(|p| *p == col) {
            Some(slot) => {
                let pool = &plan.group_values[slot][triple[slot]];
                pool[rng.gen_range(0..pool.len())]
            }
            None => rng.gen_range(0..plan.cards[col.index()]),
        };
        record.set(col, Some(token(col, v)));
    }
    record
}

/// Generate `spec.n_rows` records. Output depends only on the spec, not on
/// the number of worker threads.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<CaseRecord>> {
    spec.validate()?;
    let plan = Plan::new(spec);
    let n = spec.n_rows;
    let n_ongoing = ((n as f64) * spec.ongoing_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(spec.seed, STREAM_SYNTH_ONGOING, 0));
    let mut ongoing = vec![false; n];
    for &i in &order[..n_ongoing.min(n)] {
        ongoing[i] = true;
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| make_row(spec, &plan, i, ongoing[i]))
        .collect())
}

/// Key class the generator planted for a record (the Bayes prediction).
/// Returns `None` if the record's planted tokens were not produced by `spec`.
pub fn planted_key(spec: &SyntheticSpec, record: &CaseRecord) -> Option<usize> {
    let plan = Plan::new(spec);
    let mut score = 0;
    for (slot, col) in PLANTED.iter().enumerate() {
        let tok = record.get(*col)?;
        let v = (0..plan.cards[col.index()]).find(|v| token(*col, *v) == tok)?;
        score += plan.group_values[slot].iter().position(|g| g.contains(&v))?;
    }
    Some(key_of_score(score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::court_data::csv_io::write_case_csv;
    use crate::features::target::target_multiclass;

    fn csv_bytes(records: &[CaseRecord]) -> Vec<u8> {
        let mut out = Vec::new();
        write_case_csv(records, &mut out).unwrap();
        out
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec::new(1000, 7);
        let a = csv_bytes(&generate_synthetic(&spec).unwrap());
        let b = csv_bytes(&generate_synthetic(&spec).unwrap());
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| csv_bytes(&generate_synthetic(&spec).unwrap()));
        assert_eq!(a, c);
    }

    #[test]
    fn exact_ongoing_count() {
        let mut spec = SyntheticSpec::new(1000, 7);
        spec.ongoing_fraction = 0.1;
        let rows = generate_synthetic(&spec).unwrap();
        assert_eq!(rows.iter().filter(|r| r.is_ongoing()).count(), 100);
    }

    #[test]
    fn bayes_accuracy_tracks_signal() {
        let mut spec = SyntheticSpec::new(20_000, 3);
        spec.ongoing_fraction = 0.0;
        spec.signal_strength = 0.7;
        let rows = generate_synthetic(&spec).unwrap();
        let hits = rows
            .iter()
            .filter(|r| {
                let days = (r.date_of_decision.unwrap() - r.date_of_filing).num_days();
                let class = target_multiclass(Some(days)).unwrap().index();
                planted_key(&spec, r) == Some(class)
            })
            .count();
        let acc = hits as f64 / rows.len() as f64;
        // Binomial sd at n = 20000 is ~0.0032.
        assert!((acc - 0.7).abs() < 0.015, "bayes accuracy {acc}");
    }

    #[test]
    fn invalid_specs() {
        let mut spec = SyntheticSpec::new(10, 1);
        spec.class_prior = vec![0.5, 0.5, 0.5, 0.0, 0.0];
        assert!(matches!(generate_synthetic(&spec), Err(Error::InvalidSynthetic(_))));
        let mut spec = SyntheticSpec::new(10, 1);
        spec.cardinalities.insert(Column::Act, 3);
        assert!(generate_synthetic(&spec).is_err());
        let mut spec = SyntheticSpec::new(10, 1);
        spec.cardinalities.insert(Column::Section, 0);
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn every_key_has_triples() {
        let plan = Plan::new(&SyntheticSpec::new(1, 1));
        assert!(plan.triples.iter().all(|t| !t.is_empty()));
        assert_eq!(plan.triples.iter().map(Vec::len).sum::<usize>(), 125);
    }
}
