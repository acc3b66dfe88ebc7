//! Yearly and monthly interaction networks, the monthly amount regime and
//! strongly connected components.

mod build;
mod export;
mod graph;
mod scc;

use thiserror::Error;

use crate::types::MonthKey;

pub use build::{
    build_monthly_network, build_yearly_efos_network, compute_activity_regime, AmountRegime, EdgeKinds, MinTxScope,
    YearlyOptions,
};
pub use export::{write_edge_list_csv, write_node_classes_csv};
pub use graph::{EdgePayload, NodeClass, Slice, TemporalGraph};
pub use scc::{largest_scc_subgraph, strongly_connected_components, SccPartition};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("no invoices emitted by labeled taxpayers in {0}")]
    NoEfosActivity(MonthKey),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("regime computed for {regime} used for {requested}")]
    PeriodMismatch { regime: MonthKey, requested: MonthKey },
}
