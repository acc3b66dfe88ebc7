//! Bounded-distance reach, close-EFOS counts and the yearly proximity index.

mod close;
mod export;
mod reach;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::TaxpayerIdx;

pub use close::{
    close_efos_count, close_efos_counts, close_efos_set, normalize_and_select, proximity_index, proximity_indices,
    quartile_cut, CloseMetric, ProximityIndex, ProximityOptions, SigmaNumerator, CLOSE_DISTANCE,
};
pub use export::{close_histogram, write_close_histogram_csv, write_reach_curves_csv};
pub use reach::{mean_reach, reach, reach_profiles, ReachProfile, DEFAULT_MAX_DISTANCE};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("taxpayer {0:?} is not a node of the component")]
    NodeNotInScc(TaxpayerIdx),
    #[error("empty node set")]
    EmptySet,
    #[error("no proximity indices")]
    EmptyIndices,
    #[error("maximum distance must be at least 1")]
    ZeroDistance,
    #[error("threshold {0} outside [0, 1]")]
    ThresholdRange(String),
}

/// Cohort a reach curve is averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cohort {
    Efos,
    Unclassified,
}
