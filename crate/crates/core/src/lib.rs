//! Detection of suspected invoice mills in aggregated electronic-invoice data.

pub mod classifier;
pub mod estimate;
pub mod ingest;
pub mod metrics;
pub mod network;
pub mod seed;
pub mod stats;
pub mod synthgen;
pub mod types;

pub use types::{Centavos, MonthKey, TaxpayerId, TaxpayerIdx};
