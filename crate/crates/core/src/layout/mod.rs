//! Candidate layout generation: greedy Qd-trees and workload-aware Z-ordering.

mod qdtree;
mod zorder;

pub use qdtree::{build_qdtree, candidate_cuts, QdNode, QdTree, QdTreeConfig};
pub use zorder::{zorder_columns, ZKey, ZOrder, DEFAULT_BITS_PER_COLUMN, MAX_SORT_COLUMNS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{query_cost, Dataset, FitSource, Layout, LayoutId, Query, Routing};

/// Target partition count `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartitionBudget(usize);

impl PartitionBudget {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("partition budget must be at least 1".into()));
        }
        Ok(PartitionBudget(k))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// `max(1, sample_rows / (4k))`.
pub fn default_min_leaf_rows(sample_rows: usize, budget: PartitionBudget) -> usize {
    (sample_rows / (4 * budget.get())).max(1)
}

fn created_at(workload: &[Query]) -> u64 {
    workload.last().map_or(0, |q| q.seq)
}

pub fn generate_qdtree(
    sample: &Dataset,
    workload: &[Query],
    budget: PartitionBudget,
    min_leaf_rows: usize,
    id: LayoutId,
) -> Layout {
    let tree = build_qdtree(sample, workload, budget.get(), &QdTreeConfig::new(min_leaf_rows));
    Layout::materialize(id, Routing::QdTree(tree), sample, FitSource::Sample, created_at(workload))
}

pub fn generate_zorder(sample: &Dataset, workload: &[Query], budget: PartitionBudget, id: LayoutId) -> Layout {
    let z = zorder_routing(sample, workload, budget);
    Layout::materialize(id, Routing::ZOrder(z), sample, FitSource::Sample, created_at(workload))
}

pub fn zorder_routing(sample: &Dataset, workload: &[Query], budget: PartitionBudget) -> ZOrder {
    let cols = zorder_columns(workload, sample.num_columns());
    ZOrder::build(sample, cols, DEFAULT_BITS_PER_COLUMN, budget.get())
}

/// Qd-tree fitted to exactly one template's queries.
pub fn best_layout_for_template(
    sample: &Dataset,
    template_queries: &[Query],
    budget: PartitionBudget,
    id: LayoutId,
) -> Result<Layout> {
    if template_queries.is_empty() {
        return Err(Error::InvalidParameter("template has no queries".into()));
    }
    Ok(generate_qdtree(sample, template_queries, budget, default_min_leaf_rows(sample.num_rows(), budget), id))
}

/// Per-query costs of one layout over a query list.
#[derive(Clone, Debug, PartialEq)]
pub struct CostVector(pub Vec<f64>);

impl CostVector {
    /// Mean cost; 0 for an empty vector.
    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.iter().sum::<f64>() / self.0.len() as f64
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Mean absolute difference (L1 distance divided by dimension).
    pub fn normalized_l1(&self, other: &CostVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum::<f64>() / self.0.len() as f64
    }
}

pub fn eval_skipped(layout: &Layout, queries: &[Query]) -> CostVector {
    CostVector(queries.iter().map(|q| query_cost(layout, q)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, Predicate};

    fn quartile_layout() -> (Dataset, Layout) {
        let n = 10_000;
        let ds = Dataset::new(vec![Column::numeric("x", (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect())])
            .unwrap();
        let z = zorder_routing(&ds, &[Query::new(0, vec![Predicate::eq(0, 0.1)])], PartitionBudget::new(4).unwrap());
        let layout = Layout::materialize(LayoutId(1), Routing::ZOrder(z), &ds, FitSource::Full, 0);
        (ds, layout)
    }

    #[test]
    fn eval_skipped_examples() {
        let (ds, quartiles) = quartile_layout();
        let costs = eval_skipped(
            &quartiles,
            &[Query::new(0, vec![Predicate::between(0, 0.0, 0.5)]), Query::new(1, vec![Predicate::between(0, 0.0, 0.25)])],
        );
        assert_eq!(costs.0, vec![0.5, 0.25]);

        let single = Layout::materialize(LayoutId(0), Routing::Single, &ds, FitSource::Full, 0);
        let qs: Vec<Query> = (0..3).map(|i| Query::new(i, vec![Predicate::eq(0, 0.5)])).collect();
        assert_eq!(eval_skipped(&single, &qs).0, vec![1.0, 1.0, 1.0]);
        let miss: Vec<Query> = (0..3).map(|i| Query::new(i, vec![Predicate::eq(0, 7.0)])).collect();
        assert_eq!(eval_skipped(&single, &miss).0, vec![0.0, 0.0, 0.0]);

        let empty = eval_skipped(&single, &[]);
        assert!(empty.is_empty());
        assert_eq!(empty.mean(), 0.0);
    }

    #[test]
    fn empty_workload_and_unit_budget_give_one_partition() {
        let (ds, _) = quartile_layout();
        let k4 = PartitionBudget::new(4).unwrap();
        let empty = generate_qdtree(&ds, &[], k4, 10, LayoutId(0));
        assert_eq!(empty.partition_count(), 1);
        let q = Query::new(0, vec![Predicate::between(0, 0.1, 0.2)]);
        assert_eq!(query_cost(&empty, &q), 1.0);
        let k1 = generate_qdtree(&ds, &[q], PartitionBudget::new(1).unwrap(), 10, LayoutId(0));
        assert_eq!(k1.routing, empty.routing);
        assert!(PartitionBudget::new(0).is_err());
    }

    #[test]
    fn template_layout_is_deterministic_and_needs_queries() {
        let (ds, _) = quartile_layout();
        let k = PartitionBudget::new(2).unwrap();
        let q = vec![Query::new(0, vec![Predicate::between(0, 0.3, 0.6)])];
        let a = best_layout_for_template(&ds, &q, k, LayoutId(3)).unwrap();
        let b = best_layout_for_template(&ds, &q, k, LayoutId(3)).unwrap();
        assert_eq!(a, b);
        let Routing::QdTree(tree) = &a.routing else { panic!("expected qd-tree") };
        let cut = tree.cuts().next().unwrap();
        assert!(cut.op.operands()[0] == 0.3 || cut.op.operands()[0] == 0.6);
        assert!(best_layout_for_template(&ds, &[], k, LayoutId(3)).is_err());
    }

    #[test]
    fn normalized_l1_examples() {
        let a = CostVector(vec![0.2, 0.4, 0.1, 0.3]);
        let b = CostVector(vec![0.6, 0.8, 0.5, 0.7]);
        assert!((a.normalized_l1(&b) - 0.4).abs() < 1e-12);
        assert_eq!(a.normalized_l1(&a), 0.0);
    }
}
