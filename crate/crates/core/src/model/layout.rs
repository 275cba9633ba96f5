use std::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::meta::{partition_matches, partition_meta, PartitionMeta, DEFAULT_DISTINCT_CAP};
use super::query::Query;
use crate::error::Result;
use crate::layout::{QdTree, ZOrder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayoutId(pub u64);

impl fmt::Display for LayoutId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which rows the partition metadata was computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitSource {
    Full,
    Sample,
}

/// Record-to-partition mapping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Routing {
    /// Everything in one partition.
    Single,
    QdTree(QdTree),
    ZOrder(ZOrder),
}

impl Routing {
    pub fn partition_count(&self) -> usize {
        match self {
            Routing::Single => 1,
            Routing::QdTree(t) => t.leaf_count(),
            Routing::ZOrder(z) => z.partition_count(),
        }
    }

    /// Partition index for a record whose column values are given by `value`.
    pub fn route<F: Fn(usize) -> f64>(&self, value: F) -> usize {
        match self {
            Routing::Single => 0,
            Routing::QdTree(t) => t.route(value),
            Routing::ZOrder(z) => z.route(value),
        }
    }

    pub fn route_row(&self, dataset: &Dataset, row: usize) -> usize {
        self.route(|c| dataset.value(row, c))
    }
}

/// A data layout: a routing function plus per-partition metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub id: LayoutId,
    pub routing: Routing,
    pub partitions: Vec<PartitionMeta>,
    /// Sequence number of the query stream when the layout was generated.
    pub created_at: u64,
    pub fitted_on: FitSource,
}

impl AsRef<Layout> for Layout {
    fn as_ref(&self) -> &Layout {
        self
    }
}

impl Layout {
    /// Routes every row of `dataset` and computes exact partition metadata.
    /// Partitions no row routes to are kept as empty metadata.
    pub fn materialize(
        id: LayoutId,
        routing: Routing,
        dataset: &Dataset,
        fitted_on: FitSource,
        created_at: u64,
    ) -> Layout {
        let mut groups = vec![Vec::new(); routing.partition_count()];
        for row in 0..dataset.num_rows() {
            groups[routing.route_row(dataset, row)].push(row);
        }
        let partitions = groups
            .iter()
            .map(|rows| {
                if rows.is_empty() {
                    PartitionMeta::empty()
                } else {
                    partition_meta(dataset, rows, DEFAULT_DISTINCT_CAP).expect("rows are non-empty and in range")
                }
            })
            .collect();
        Layout { id, routing, partitions, created_at, fitted_on }
    }

    pub fn total_rows(&self) -> u64 {
        self.partitions.iter().map(|p| p.row_count).sum()
    }

    pub fn partition_count(&self) -> usize {
        self.partitions.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Layout> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Fraction of rows in partitions the query cannot skip, from metadata only.
pub fn query_cost(layout: &Layout, query: &Query) -> f64 {
    let mut total = 0u64;
    let mut touched = 0u64;
    for p in &layout.partitions {
        total += p.row_count;
        if partition_matches(p, query) {
            touched += p.row_count;
        }
    }
    if total == 0 {
        return 1.0;
    }
    (touched as f64 / total as f64).clamp(0.0, 1.0)
}

/// Exact fraction of rows satisfying the query, by full scan.
pub fn exact_fraction(dataset: &Dataset, query: &Query) -> f64 {
    if dataset.num_rows() == 0 {
        return 0.0;
    }
    let hits = (0..dataset.num_rows()).filter(|&r| query.eval_row(dataset, r)).count();
    hits as f64 / dataset.num_rows() as f64
}
