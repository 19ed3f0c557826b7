//! Court-case pendency prediction.
//!
//! Ingests filing-time case records, derives pendency targets, encodes
//! categorical attributes, trains decision forests, evaluates them and
//! attributes predictions to features.

pub mod cli;
pub mod court_data;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod rng;
pub mod search;

pub use error::{Error, Result};
