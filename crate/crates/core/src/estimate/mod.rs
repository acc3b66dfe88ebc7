//! Suspect report, cohort comparisons and bounded VAT-evasion estimates.

mod cohorts;
mod export;
mod gap;
mod report;

use thiserror::Error;

use crate::types::TaxpayerId;

pub use cohorts::{
    cohort_distribution_summary, cohort_log_amounts, taxpayer_breakdown, Breakdown, CohortQuartiles, Variable,
};
pub use export::{write_breakdown_csv, write_cohort_quartiles_csv, write_estimates_csv, write_suspects_csv};
pub use gap::{
    bounds_from_gaps, evasion_estimate, nominal_vat, vat_gap, EvasionEstimate, GapEntry, VatGap, DEFAULT_QUARTILE,
};
pub use report::{build_suspect_report, intersect_suspects, CohortKind, ReportInputs, SuspectRecord, SuspectReport};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EstimateError {
    #[error("taxpayer {0} has no income emissions in {1}")]
    NoEmissions(TaxpayerId, i32),
    #[error("suspect set is empty")]
    EmptySuspects,
    #[error("quartile {0} outside [0, 1]")]
    Quartile(String),
}
