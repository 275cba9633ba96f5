//! Shared fixtures for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relayout::engine::CostMap;
use relayout::model::{Dataset, LayoutId, Query};
use relayout::sim::{gen_dataset, gen_template_workload, DatasetSpec, TemplateWorkloadSpec};

pub use relayout;

/// `t` rows of independent uniform costs over `n` states.
pub fn cost_rows(n: usize, t: usize, seed: u64) -> Vec<CostMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..t).map(|_| (0..n as u64).map(|s| (LayoutId(s), rng.gen())).collect()).collect()
}

/// Synthetic table plus a template workload over it.
pub fn table_and_queries(rows: usize, queries: usize, seed: u64) -> (Dataset, Vec<Query>) {
    let data = gen_dataset(&DatasetSpec { rows, ..DatasetSpec::default() }, seed).expect("valid spec");
    let spec = TemplateWorkloadSpec { num_templates: 8, total_queries: queries, dwell_p: None };
    let workload = gen_template_workload(&spec, &data, seed).expect("valid spec");
    (data, workload)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_the_requested_size() {
        let rows = cost_rows(3, 10, 1);
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.len() == 3));
        let (d, q) = table_and_queries(300, 50, 2);
        assert_eq!((d.num_rows(), q.len()), (300, 50));
    }
}
