//! Case records: parsing, metadata joins, cleaning, imputation and
//! synthetic generation.

pub mod clean;
pub mod csv_io;
pub mod record;
pub mod synth;

pub use clean::{clean, default_cutoff, impute_missing, CleanStats};
pub use csv_io::{join_metadata, parse_case_csv, write_case_csv, AuxTable, ParseOutcome, RowError};
pub use record::{case_schema, CaseRecord, Column, NOT_AVAILABLE};
pub use synth::{generate_synthetic, SyntheticSpec};
