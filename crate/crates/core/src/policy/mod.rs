//! Comparison policies and the offline optimum.

mod dp;
mod regret;

pub use dp::{offline_opt_dp, offline_opt_from_costs, two_state_asym_opt, AsymOpt, DpSolution};
pub use regret::RegretLedger;

use std::fmt;
use std::str::FromStr;

use crate::engine::Decision;
use crate::error::{Error, Result};
use crate::layout::{default_min_leaf_rows, eval_skipped, generate_qdtree, PartitionBudget};
use crate::model::{Dataset, Layout, LayoutId, Query};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Static,
    Greedy,
    Regret,
    Dumts,
    MtsOptimal,
    OfflineOptimal,
    ParallelQ,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Static,
        PolicyKind::Greedy,
        PolicyKind::Regret,
        PolicyKind::Dumts,
        PolicyKind::MtsOptimal,
        PolicyKind::OfflineOptimal,
        PolicyKind::ParallelQ,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Static => "static",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Regret => "regret",
            PolicyKind::Dumts => "dumts",
            PolicyKind::MtsOptimal => "mts-optimal",
            PolicyKind::OfflineOptimal => "offline-optimal",
            PolicyKind::ParallelQ => "parallel-q",
        }
    }

    /// Needs template labels on every query.
    pub fn needs_templates(self) -> bool {
        matches!(self, PolicyKind::MtsOptimal | PolicyKind::OfflineOptimal)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "static" => PolicyKind::Static,
            "greedy" => PolicyKind::Greedy,
            "regret" => PolicyKind::Regret,
            "dumts" | "oreo" => PolicyKind::Dumts,
            "mts-optimal" => PolicyKind::MtsOptimal,
            "offline-optimal" => PolicyKind::OfflineOptimal,
            "parallel-q" | "parallel" => PolicyKind::ParallelQ,
            _ => return Err(Error::Config(format!("unknown policy '{s}'"))),
        })
    }
}

/// One Qd-tree fitted to the whole workload. An empty workload yields a
/// single partition.
pub fn static_policy(workload: &[Query], sample: &Dataset, budget: PartitionBudget, id: LayoutId) -> Layout {
    generate_qdtree(sample, workload, budget, default_min_leaf_rows(sample.num_rows(), budget), id)
}

fn greedy_decision(current_mean: f64, candidate_mean: f64, candidate: LayoutId) -> Decision {
    if candidate_mean < current_mean {
        Decision::SwitchTo(candidate)
    } else {
        Decision::Stay
    }
}

/// Switch whenever the candidate has strictly lower mean cost on the window.
pub fn greedy_policy_step(current: &Layout, candidate: &Layout, window: &[Query]) -> Decision {
    if candidate.id == current.id {
        return Decision::Stay;
    }
    greedy_decision(eval_skipped(current, window).mean(), eval_skipped(candidate, window).mean(), candidate.id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::best_layout_for_template;
    use crate::model::{Column, FitSource, Predicate, Routing};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(rows: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        Dataset::new(vec![
            Column::numeric("a", (0..rows).map(|_| rng.gen()).collect()),
            Column::numeric("b", (0..rows).map(|_| rng.gen()).collect()),
        ])
        .unwrap()
    }

    #[test]
    fn policy_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
        }
        assert_eq!("oreo".parse::<PolicyKind>().unwrap(), PolicyKind::Dumts);
        assert_eq!("MTS_OPTIMAL".parse::<PolicyKind>().unwrap(), PolicyKind::MtsOptimal);
        assert!("wfit".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn static_examples() {
        let ds = uniform(2000);
        let budget = PartitionBudget::new(8).unwrap();
        let empty = static_policy(&[], &ds, budget, LayoutId(0));
        assert_eq!(empty.partition_count(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w: Vec<Query> = (0..50)
            .map(|s| {
                let lo: f64 = rng.gen_range(0.0..0.9);
                Query::new(s, vec![Predicate::between(0, lo, lo + 0.1)]).with_template(0)
            })
            .collect();
        let st = static_policy(&w, &ds, budget, LayoutId(1));
        let best = best_layout_for_template(&ds, &w, budget, LayoutId(1)).unwrap();
        assert_eq!(st.routing, best.routing);
    }

    #[test]
    fn greedy_is_strict_without_hysteresis() {
        assert_eq!(greedy_decision(0.5, 0.4, LayoutId(2)), Decision::SwitchTo(LayoutId(2)));
        assert_eq!(greedy_decision(0.5, 0.5, LayoutId(2)), Decision::Stay);
        assert_eq!(greedy_decision(0.5, 0.5 - 1e-9, LayoutId(2)), Decision::SwitchTo(LayoutId(2)));
    }

    #[test]
    fn greedy_on_layouts() {
        let ds = uniform(2000);
        let single = Layout::materialize(LayoutId(0), Routing::Single, &ds, FitSource::Full, 0);
        let w: Vec<Query> = (0..20).map(|s| Query::new(s, vec![Predicate::between(0, 0.1, 0.2)])).collect();
        let fitted = static_policy(&w, &ds, PartitionBudget::new(8).unwrap(), LayoutId(1));
        assert_eq!(greedy_policy_step(&single, &fitted, &w), Decision::SwitchTo(LayoutId(1)));
        assert_eq!(greedy_policy_step(&fitted, &single, &w), Decision::Stay);
        assert_eq!(greedy_policy_step(&single, &single, &w), Decision::Stay);
    }
}
