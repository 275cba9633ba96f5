use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::RunConfig;
use super::run::{load_inputs, run_simulation, Summary};
use crate::error::{Error, Result};
use crate::manager::CandidateSource;
use crate::model::{Dataset, Query};
use crate::policy::PolicyKind;

/// Values to cross. An empty axis keeps the base config's value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepGrid {
    pub policies: Vec<PolicyKind>,
    pub alphas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub gammas: Vec<f64>,
    pub delays: Vec<usize>,
    pub sources: Vec<CandidateSource>,
    pub qs: Vec<usize>,
    pub seeds: Vec<u64>,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Comma-separated list, e.g. `10,80,300`.
pub fn parse_list<T: FromStr>(key: &str, text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| Error::Config(format!("{key}: cannot parse '{s}': {e}"))))
        .collect()
}

impl SweepGrid {
    /// Every cell's config, seeds outermost.
    pub fn cells(&self, base: &RunConfig) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for seed in axis(&self.seeds, base.seed) {
            for policy in axis(&self.policies, base.policy) {
                for alpha in axis(&self.alphas, base.alpha) {
                    for epsilon in axis(&self.epsilons, base.epsilon) {
                        for gamma in axis(&self.gammas, base.gamma) {
                            for delay in axis(&self.delays, base.delay) {
                                for source in axis(&self.sources, base.candidate_source) {
                                    for q in axis(&self.qs, base.q) {
                                        let mut c = base.clone();
                                        c.seed = seed;
                                        c.policy = policy;
                                        c.alpha = alpha;
                                        c.epsilon = epsilon;
                                        c.gamma = gamma;
                                        c.delay = delay;
                                        c.candidate_source = source;
                                        c.q = q;
                                        out.push(c);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Run every cell in parallel; rows come back in cell order. Inputs are
/// built once per seed and shared across that seed's cells.
pub fn sweep(base: &RunConfig, grid: &SweepGrid) -> Result<Vec<Summary>> {
    let cells = grid.cells(base);
    for c in &cells {
        c.validate()?;
    }
    let mut inputs: BTreeMap<u64, (Arc<Dataset>, Arc<Vec<Query>>)> = BTreeMap::new();
    for c in &cells {
        if let std::collections::btree_map::Entry::Vacant(e) = inputs.entry(c.seed) {
            let (ds, w) = load_inputs(c)?;
            e.insert((ds, Arc::new(w)));
        }
    }
    cells
        .par_iter()
        .map(|c| {
            let (ds, w) = &inputs[&c.seed];
            run_simulation(c, ds.clone(), w).map(|out| out.summary)
        })
        .collect()
}
