use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::layout::{eval_skipped, CostVector};
use crate::model::{Layout, LayoutId, Query};

/// Mean absolute difference between two cost vectors.
pub fn distance(a: &CostVector, b: &CostVector) -> f64 {
    a.normalized_l1(b)
}

/// Admit when the candidate's cost vector is more than `epsilon` away from
/// every existing layout's. An empty state space always admits.
pub fn admit_state<L: AsRef<Layout>>(
    state_space: &[L],
    candidate: &Layout,
    eval_queries: &[Query],
    epsilon: f64,
) -> Result<bool> {
    if eval_queries.is_empty() {
        return Err(Error::NoEvaluationSample);
    }
    let c = eval_skipped(candidate, eval_queries);
    Ok(state_space.iter().all(|l| distance(&c, &eval_skipped(l.as_ref(), eval_queries)) > epsilon))
}

/// Layouts to drop so that no two survivors are within `epsilon`.
///
/// Layouts are visited best mean first (ties to the lower id); one that is
/// close to an earlier survivor is removed unless protected.
pub fn prune_states<L: AsRef<Layout>>(
    state_space: &[L],
    eval_queries: &[Query],
    epsilon: f64,
    protected: &BTreeSet<LayoutId>,
) -> Vec<LayoutId> {
    if eval_queries.is_empty() {
        return Vec::new();
    }
    let mut scored: Vec<(f64, LayoutId, CostVector)> = state_space
        .iter()
        .map(|l| {
            let v = eval_skipped(l.as_ref(), eval_queries);
            (v.mean(), l.as_ref().id, v)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    prune_scored(&scored, epsilon, protected)
}

fn prune_scored(scored: &[(f64, LayoutId, CostVector)], epsilon: f64, protected: &BTreeSet<LayoutId>) -> Vec<LayoutId> {
    let mut survivors: Vec<&CostVector> = Vec::new();
    let mut removed = Vec::new();
    for (_, id, v) in scored {
        let close = survivors.iter().any(|s| distance(s, v) <= epsilon);
        if close && !protected.contains(id) {
            removed.push(*id);
        } else {
            survivors.push(v);
        }
    }
    removed.sort();
    removed
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[f64]) -> CostVector {
        CostVector(v.to_vec())
    }

    #[test]
    fn distance_examples_and_symmetry() {
        let a = cv(&[0.2, 0.4, 0.1, 0.3]);
        let b = cv(&[0.6, 0.8, 0.5, 0.7]);
        assert_eq!(distance(&a, &a.clone()), 0.0);
        assert!((distance(&a, &b) - 0.4).abs() < 1e-12);
        assert_eq!(distance(&a, &b), distance(&b, &a));
    }

    #[test]
    fn three_close_layouts_keep_the_best() {
        let vs = [cv(&[0.50, 0.50]), cv(&[0.48, 0.50]), cv(&[0.52, 0.50])];
        let mut scored: Vec<(f64, LayoutId, CostVector)> =
            vs.iter().enumerate().map(|(i, v)| (v.mean(), LayoutId(i as u64), v.clone())).collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let removed = prune_scored(&scored, 0.08, &BTreeSet::new());
        assert_eq!(removed, vec![LayoutId(0), LayoutId(2)]);
        // the lowest mean is layout 1
        assert!(vs[1].mean() < vs[0].mean() && vs[1].mean() < vs[2].mean());
    }

    #[test]
    fn protected_and_far_layouts_survive() {
        let scored = vec![
            (0.1, LayoutId(4), cv(&[0.1, 0.1])),
            (0.1, LayoutId(5), cv(&[0.1, 0.1])),
            (0.9, LayoutId(6), cv(&[0.9, 0.9])),
        ];
        assert_eq!(prune_scored(&scored, 0.08, &BTreeSet::new()), vec![LayoutId(5)]);
        assert!(prune_scored(&scored, 0.08, &[LayoutId(5)].into_iter().collect()).is_empty());
        assert!(prune_scored(&scored[..1], 0.08, &BTreeSet::new()).is_empty());
    }
}
