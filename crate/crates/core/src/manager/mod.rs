//! Candidate generation from recent queries and admission into the state
//! space.

mod admission;
mod reservoir;
mod window;

pub use admission::{admit_state, distance, prune_states};
pub use reservoir::TimeBiasedReservoir;
pub use window::SlidingWindow;

use std::collections::BTreeSet;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::layout::{build_qdtree, default_min_leaf_rows, zorder_routing, PartitionBudget, QdTreeConfig};
use crate::model::{Dataset, FitSource, Layout, LayoutId, Query, Routing};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateKind {
    QdTree,
    ZOrder,
}

impl FromStr for CandidateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qdtree" => Ok(CandidateKind::QdTree),
            "zorder" => Ok(CandidateKind::ZOrder),
            _ => Err(Error::Config(format!("unknown candidate kind '{s}'"))),
        }
    }
}

impl CandidateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateKind::QdTree => "qdtree",
            CandidateKind::ZOrder => "zorder",
        }
    }
}

/// Which query sample candidates are fitted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateSource {
    Window,
    Reservoir,
    Both,
}

impl FromStr for CandidateSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "window" | "sw" => Ok(CandidateSource::Window),
            "reservoir" | "rs" => Ok(CandidateSource::Reservoir),
            "both" | "sw+rs" => Ok(CandidateSource::Both),
            _ => Err(Error::Config(format!("unknown candidate source '{s}'"))),
        }
    }
}

impl CandidateSource {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateSource::Window => "window",
            CandidateSource::Reservoir => "reservoir",
            CandidateSource::Both => "both",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManagerConfig {
    pub window_w: usize,
    pub reservoir_r: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub regen_period: usize,
    pub candidate_kind: CandidateKind,
    pub candidate_source: CandidateSource,
    pub budget: PartitionBudget,
    /// Prune every this many queries; never when `None`.
    pub prune_period: Option<usize>,
    pub seed: u64,
}

impl ManagerConfig {
    pub fn new(budget: PartitionBudget, seed: u64) -> Self {
        ManagerConfig {
            window_w: 200,
            reservoir_r: 64,
            lambda: 0.01,
            epsilon: 0.08,
            regen_period: 100,
            candidate_kind: CandidateKind::QdTree,
            candidate_source: CandidateSource::Window,
            budget,
            prune_period: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon must be in [0, 1], got {}", self.epsilon)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.window_w == 0 || self.reservoir_r == 0 || self.regen_period == 0 {
            return Err(Error::InvalidParameter("window, reservoir and regen period must be positive".into()));
        }
        if self.prune_period == Some(0) {
            return Err(Error::InvalidParameter("prune period must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum StateEvent {
    Add(Arc<Layout>),
    Remove(LayoutId),
}

#[derive(Clone, Debug, Default)]
pub struct ManagerOutput {
    /// Every candidate generated by this step, admitted or not.
    pub candidates: Vec<Arc<Layout>>,
    pub events: Vec<StateEvent>,
}

pub struct LayoutManager {
    config: ManagerConfig,
    dataset: Arc<Dataset>,
    sample: Arc<Dataset>,
    window: SlidingWindow,
    reservoir: TimeBiasedReservoir,
    space: Vec<Arc<Layout>>,
    seen: u64,
    next_id: u64,
    min_leaf_rows: usize,
}

impl LayoutManager {
    /// `initial` seeds the state space; new layouts get ids from `next_id` up.
    pub fn new(
        config: ManagerConfig,
        dataset: Arc<Dataset>,
        sample: Arc<Dataset>,
        initial: Vec<Arc<Layout>>,
        next_id: u64,
    ) -> Result<Self> {
        config.validate()?;
        let min_leaf_rows = default_min_leaf_rows(sample.num_rows(), config.budget);
        Ok(LayoutManager {
            window: SlidingWindow::new(config.window_w),
            reservoir: TimeBiasedReservoir::new(config.reservoir_r, config.lambda, config.seed),
            config,
            dataset,
            sample,
            space: initial,
            seen: 0,
            next_id,
            min_leaf_rows,
        })
    }

    pub fn config(&self) -> &ManagerConfig {
        &self.config
    }

    pub fn state_space(&self) -> &[Arc<Layout>] {
        &self.space
    }

    pub fn window(&self) -> &SlidingWindow {
        &self.window
    }

    pub fn reservoir(&self) -> &TimeBiasedReservoir {
        &self.reservoir
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    fn generate(&mut self, queries: &[Query], created_at: u64) -> Arc<Layout> {
        let id = LayoutId(self.next_id);
        self.next_id += 1;
        let routing = match self.config.candidate_kind {
            CandidateKind::QdTree => Routing::QdTree(build_qdtree(
                &self.sample,
                queries,
                self.config.budget.get(),
                &QdTreeConfig::new(self.min_leaf_rows),
            )),
            CandidateKind::ZOrder => Routing::ZOrder(zorder_routing(&self.sample, queries, self.config.budget)),
        };
        Arc::new(Layout::materialize(id, routing, &self.dataset, FitSource::Full, created_at))
    }

    pub fn step(&mut self, query: &Query, protected: &BTreeSet<LayoutId>) -> Result<ManagerOutput> {
        self.window.push(query.clone());
        self.reservoir.push(query.clone(), query.seq);
        self.seen += 1;
        let mut out = ManagerOutput::default();
        if self.seen.is_multiple_of(self.config.regen_period as u64) {
            let eval = self.reservoir.items();
            let sources: Vec<Vec<Query>> = match self.config.candidate_source {
                CandidateSource::Window => vec![self.window.to_vec()],
                CandidateSource::Reservoir => vec![eval.clone()],
                CandidateSource::Both => vec![self.window.to_vec(), eval.clone()],
            };
            for queries in sources {
                let candidate = self.generate(&queries, query.seq);
                out.candidates.push(candidate.clone());
                if admit_state(&self.space, &candidate, &eval, self.config.epsilon)? {
                    self.space.push(candidate.clone());
                    out.events.push(StateEvent::Add(candidate));
                }
            }
        }
        if let Some(period) = self.config.prune_period {
            if self.seen.is_multiple_of(period as u64) {
                let removed = prune_states(&self.space, &self.reservoir.items(), self.config.epsilon, protected);
                self.space.retain(|l| !removed.contains(&l.id));
                out.events.extend(removed.into_iter().map(StateEvent::Remove));
            }
        }
        Ok(out)
    }
}
