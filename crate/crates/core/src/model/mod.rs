//! Datasets, queries, partition metadata and the logical cost model.

mod dataset;
pub mod io;
mod layout;
mod ledger;
mod meta;
mod query;

pub use dataset::{Column, ColumnData, ColumnKind, Dataset};
pub use layout::{exact_fraction, query_cost, FitSource, Layout, LayoutId, Routing};
pub use ledger::{CostLedger, EventKind, TraceEvent};
pub use meta::{partition_matches, partition_meta, ColumnStats, PartitionMeta, DEFAULT_DISTINCT_CAP};
pub use query::{Op, Predicate, Query};
