use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::dataset::{ColumnData, Dataset};
use super::query::{Op, Predicate, Query};
use crate::error::{Error, Result};

/// Maximum number of distinct codes tracked per categorical column per
/// partition before the overflow flag is set.
pub const DEFAULT_DISTINCT_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnStats {
    Numeric {
        min: f64,
        max: f64,
    },
    Categorical {
        /// Sorted distinct codes; truncated when `overflow` is set.
        codes: Vec<u32>,
        /// Set when the partition holds more distinct codes than the cap;
        /// any value is then considered possible.
        overflow: bool,
    },
}

impl ColumnStats {
    /// Conservative: false only if no value consistent with the stats
    /// satisfies the predicate.
    #[inline]
    pub fn may_satisfy(&self, op: &Op) -> bool {
        match self {
            ColumnStats::Numeric { min, max } => op.overlaps(*min, *max),
            ColumnStats::Categorical { overflow: true, .. } => true,
            ColumnStats::Categorical { codes, .. } => codes.iter().any(|&c| op.eval(f64::from(c))),
        }
    }
}

/// Zone-map style metadata for one partition. A partition with
/// `row_count == 0` carries no column stats and never matches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionMeta {
    pub row_count: u64,
    pub columns: Vec<ColumnStats>,
}

impl PartitionMeta {
    pub fn empty() -> Self {
        PartitionMeta { row_count: 0, columns: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.row_count == 0
    }

    #[inline]
    pub fn may_satisfy(&self, pred: &Predicate) -> bool {
        match self.columns.get(pred.col) {
            Some(stats) => stats.may_satisfy(&pred.op),
            // Unknown column: cannot prove anything.
            None => !self.is_empty(),
        }
    }
}

/// Exact metadata over `rows` of `dataset`.
pub fn partition_meta(dataset: &Dataset, rows: &[usize], distinct_cap: usize) -> Result<PartitionMeta> {
    if rows.is_empty() {
        return Err(Error::EmptyPartition);
    }
    if let Some(&row) = rows.iter().find(|&&r| r >= dataset.num_rows()) {
        return Err(Error::RowOutOfRange { row, num_rows: dataset.num_rows() });
    }
    let columns = dataset
        .columns()
        .iter()
        .map(|col| match &col.data {
            ColumnData::Numeric(values) => {
                let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
                for &r in rows {
                    min = min.min(values[r]);
                    max = max.max(values[r]);
                }
                ColumnStats::Numeric { min, max }
            }
            ColumnData::Categorical(codes) => {
                let mut distinct = BTreeSet::new();
                let mut overflow = false;
                for &r in rows {
                    distinct.insert(codes[r]);
                    if distinct.len() > distinct_cap {
                        overflow = true;
                        break;
                    }
                }
                let mut codes: Vec<u32> = distinct.into_iter().collect();
                codes.truncate(distinct_cap);
                ColumnStats::Categorical { codes, overflow }
            }
        })
        .collect();
    Ok(PartitionMeta { row_count: rows.len() as u64, columns })
}

/// False (skippable) only when the metadata proves no row satisfies the
/// conjunction.
pub fn partition_matches(meta: &PartitionMeta, query: &Query) -> bool {
    !meta.is_empty() && query.predicates.iter().all(|p| meta.may_satisfy(p))
}
