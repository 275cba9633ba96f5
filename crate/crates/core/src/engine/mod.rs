//! Counter-based randomized reorganizer over a state space that can grow and
//! shrink while it runs.

mod asym;
mod parallel;
mod predictor;

pub use asym::{asym_two_state_policy, AsymTwoState, ASYM_FORWARD_MOVE};
pub use parallel::{p_ikq, parallel_q_expected_cost, ParallelConfig, ParallelEngine, ParallelStep, ParallelVariant};
pub use predictor::{TransitionPredictor, WEIGHT_FLOOR};

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::LayoutId;

pub type CostMap = BTreeMap<LayoutId, f64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub stay_on_reset: bool,
    pub seed: u64,
}

impl EngineConfig {
    pub fn new(alpha: f64, seed: u64) -> Self {
        EngineConfig { alpha, gamma: 0.0, stay_on_reset: true, seed }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_stay_on_reset(mut self, stay: bool) -> Self {
        self.stay_on_reset = stay;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must be > 1, got {}", self.alpha)));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Stay,
    SwitchTo(LayoutId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Stay,
    SwitchTo(LayoutId),
    PhaseReset(Move),
}

impl Decision {
    /// The state moved to, if this decision carries a movement charge.
    pub fn target(self) -> Option<LayoutId> {
        match self {
            Decision::SwitchTo(id) | Decision::PhaseReset(Move::SwitchTo(id)) => Some(id),
            _ => None,
        }
    }

    pub fn is_phase_reset(self) -> bool {
        matches!(self, Decision::PhaseReset(_))
    }
}

impl From<Move> for Decision {
    fn from(m: Move) -> Decision {
        match m {
            Move::Stay => Decision::Stay,
            Move::SwitchTo(id) => Decision::SwitchTo(id),
        }
    }
}

/// Uniform choice over ids in ascending order. Shared with the parallel
/// variant so a single-layout run makes the same draws.
pub(crate) fn pick_uniform(rng: &mut ChaCha8Rng, ids: &[LayoutId]) -> LayoutId {
    ids[rng.gen_range(0..ids.len())]
}

pub(crate) fn check_costs(costs: &CostMap) -> Result<()> {
    for (&state, &cost) in costs {
        if !(0.0..=1.0).contains(&cost) {
            return Err(Error::CostOutOfRange { state, cost });
        }
    }
    Ok(())
}

pub(crate) fn fnv1a(parts: impl IntoIterator<Item = u64>) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

#[derive(Clone, Debug)]
pub struct Engine {
    config: EngineConfig,
    states: BTreeSet<LayoutId>,
    active: BTreeSet<LayoutId>,
    counters: BTreeMap<LayoutId, f64>,
    deferred: BTreeSet<LayoutId>,
    current: LayoutId,
    phase: u64,
    rng: ChaCha8Rng,
    predictor: TransitionPredictor,
}

impl Engine {
    /// Starts the first phase. Without an explicit start state one is drawn
    /// uniformly, free of charge.
    pub fn new(config: EngineConfig, states: impl IntoIterator<Item = LayoutId>, start: Option<LayoutId>) -> Result<Self> {
        config.validate()?;
        let mut set = BTreeSet::new();
        for s in states {
            if !set.insert(s) {
                return Err(Error::DuplicateState(s));
            }
        }
        if set.is_empty() {
            return Err(Error::NoStates);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let current = match start {
            Some(s) if set.contains(&s) => s,
            Some(s) => return Err(Error::UnknownState(s)),
            None => pick_uniform(&mut rng, &set.iter().copied().collect::<Vec<_>>()),
        };
        Ok(Engine {
            config,
            counters: set.iter().map(|&s| (s, 0.0)).collect(),
            active: set.clone(),
            states: set,
            deferred: BTreeSet::new(),
            current,
            phase: 0,
            rng,
            predictor: TransitionPredictor::new(config.gamma),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    pub fn current(&self) -> LayoutId {
        self.current
    }

    pub fn phase(&self) -> u64 {
        self.phase
    }

    pub fn states(&self) -> &BTreeSet<LayoutId> {
        &self.states
    }

    pub fn active(&self) -> &BTreeSet<LayoutId> {
        &self.active
    }

    pub fn deferred(&self) -> &BTreeSet<LayoutId> {
        &self.deferred
    }

    pub fn counter(&self, id: LayoutId) -> Option<f64> {
        self.counters.get(&id).copied()
    }

    pub fn counters(&self) -> &BTreeMap<LayoutId, f64> {
        &self.counters
    }

    pub fn predictor(&self) -> &TransitionPredictor {
        &self.predictor
    }

    pub fn counters_digest(&self) -> String {
        fnv1a(
            std::iter::once(self.current.0)
                .chain(std::iter::once(self.phase))
                .chain(self.counters.iter().flat_map(|(id, c)| [id.0, c.to_bits()])),
        )
    }

    pub fn transition_distribution(&self) -> BTreeMap<LayoutId, f64> {
        let ids: Vec<LayoutId> = self.active.iter().copied().collect();
        ids.iter().copied().zip(self.predictor.distribution(&ids)).collect()
    }

    fn sample_active(&mut self) -> LayoutId {
        let ids: Vec<LayoutId> = self.active.iter().copied().collect();
        if self.config.gamma == 0.0 {
            return pick_uniform(&mut self.rng, &ids);
        }
        let probs = self.predictor.distribution(&ids);
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        for (id, p) in ids.iter().zip(&probs) {
            acc += p;
            if u < acc {
                return *id;
            }
        }
        *ids.last().expect("active set is non-empty")
    }

    /// New phase: every state, including deferred ones, becomes active with
    /// a zero counter.
    pub fn reset_states(&mut self) -> Result<Move> {
        if self.states.is_empty() {
            return Err(Error::NoStates);
        }
        self.active = self.states.clone();
        self.deferred.clear();
        self.counters = self.states.iter().map(|&s| (s, 0.0)).collect();
        self.predictor.end_phase();
        self.phase += 1;
        if self.config.stay_on_reset && self.states.contains(&self.current) {
            return Ok(Move::Stay);
        }
        let next = self.sample_active();
        let moved = next != self.current;
        self.current = next;
        Ok(if moved { Move::SwitchTo(next) } else { Move::Stay })
    }

    pub fn on_query(&mut self, costs: &CostMap) -> Result<Decision> {
        check_costs(costs)?;
        if let Some(&missing) = self.active.iter().find(|s| !costs.contains_key(s)) {
            return Err(Error::MissingCost(missing));
        }
        for (&id, &c) in costs {
            if self.states.contains(&id) {
                self.predictor.observe(id, c);
            }
        }
        let alpha = self.config.alpha;
        for id in &self.active {
            *self.counters.get_mut(id).expect("active states have counters") += costs[id];
        }
        let counters = &self.counters;
        self.active.retain(|id| counters[id] < alpha);
        if self.active.contains(&self.current) {
            return Ok(Decision::Stay);
        }
        if self.active.is_empty() {
            return Ok(Decision::PhaseReset(self.reset_states()?));
        }
        let next = self.sample_active();
        self.current = next;
        Ok(Decision::SwitchTo(next))
    }

    /// Joins the state space but sits out the rest of the current phase.
    pub fn add_state(&mut self, id: LayoutId) -> Result<()> {
        if !self.states.insert(id) {
            return Err(Error::DuplicateState(id));
        }
        self.deferred.insert(id);
        Ok(())
    }

    pub fn remove_state(&mut self, id: LayoutId) -> Result<Decision> {
        if !self.states.contains(&id) {
            return Err(Error::UnknownState(id));
        }
        if self.states.len() == 1 {
            return Err(Error::NoStates);
        }
        self.states.remove(&id);
        self.active.remove(&id);
        self.deferred.remove(&id);
        self.counters.remove(&id);
        self.predictor.forget(id);
        if self.active.is_empty() {
            return Ok(Decision::PhaseReset(self.reset_states()?));
        }
        if id == self.current {
            let next = self.sample_active();
            self.current = next;
            return Ok(Decision::SwitchTo(next));
        }
        Ok(Decision::Stay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u64]) -> Vec<LayoutId> {
        v.iter().copied().map(LayoutId).collect()
    }

    fn costs(pairs: &[(u64, f64)]) -> CostMap {
        pairs.iter().map(|&(id, c)| (LayoutId(id), c)).collect()
    }

    #[test]
    fn single_survivor_is_taken() {
        let mut e = Engine::new(EngineConfig::new(2.0, 1), ids(&[0, 1]), Some(LayoutId(0))).unwrap();
        e.on_query(&costs(&[(0, 1.0), (1, 0.5)])).unwrap();
        e.on_query(&costs(&[(0, 0.5), (1, 0.0)])).unwrap();
        assert_eq!(e.counter(LayoutId(0)), Some(1.5));
        let d = e.on_query(&costs(&[(0, 0.7), (1, 0.3)])).unwrap();
        assert_eq!(d, Decision::SwitchTo(LayoutId(1)));
        assert_eq!(e.counter(LayoutId(0)), Some(2.2));
        assert_eq!(e.counter(LayoutId(1)), Some(0.8));
        assert_eq!(e.active().iter().copied().collect::<Vec<_>>(), ids(&[1]));
    }

    #[test]
    fn both_full_resets_and_stays() {
        let mut e = Engine::new(EngineConfig::new(2.0, 1), ids(&[0, 1]), Some(LayoutId(0))).unwrap();
        assert_eq!(e.on_query(&costs(&[(0, 0.95), (1, 0.95)])).unwrap(), Decision::Stay);
        assert_eq!(e.on_query(&costs(&[(0, 0.95), (1, 0.95)])).unwrap(), Decision::Stay);
        let d = e.on_query(&costs(&[(0, 0.5), (1, 0.5)])).unwrap();
        assert_eq!(d, Decision::PhaseReset(Move::Stay));
        assert_eq!(e.current(), LayoutId(0));
        assert_eq!(e.phase(), 1);
        assert!(e.counters().values().all(|&c| c == 0.0));
    }

    #[test]
    fn textbook_reset_is_uniform() {
        let mut hits = 0;
        let trials = 4000;
        for seed in 0..trials {
            let cfg = EngineConfig::new(2.0, seed).with_stay_on_reset(false);
            let mut e = Engine::new(cfg, ids(&[0, 1]), Some(LayoutId(0))).unwrap();
            e.reset_states().unwrap();
            hits += (e.current() == LayoutId(1)) as u32;
        }
        let frac = hits as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 0.03, "{frac}");
    }

    #[test]
    fn added_states_wait_for_the_next_phase() {
        let mut e = Engine::new(EngineConfig::new(2.0, 3), ids(&[0, 1]), Some(LayoutId(0))).unwrap();
        e.add_state(LayoutId(2)).unwrap();
        e.add_state(LayoutId(3)).unwrap();
        assert!(e.add_state(LayoutId(2)).is_err());
        assert!(!e.active().contains(&LayoutId(2)));
        assert_eq!(e.counter(LayoutId(2)), None);
        // deferred states need no cost
        e.on_query(&costs(&[(0, 1.0), (1, 1.0)])).unwrap();
        let d = e.on_query(&costs(&[(0, 1.0), (1, 1.0)])).unwrap();
        assert!(d.is_phase_reset());
        assert!(e.deferred().is_empty());
        assert_eq!(e.counter(LayoutId(2)), Some(0.0));
        assert!(e.active().contains(&LayoutId(3)));
    }

    #[test]
    fn removal_rules() {
        let mut e = Engine::new(EngineConfig::new(2.0, 3), ids(&[0, 1, 2]), Some(LayoutId(0))).unwrap();
        e.on_query(&costs(&[(0, 0.0), (1, 1.0), (2, 0.0)])).unwrap();
        e.on_query(&costs(&[(0, 0.0), (1, 1.0), (2, 0.0)])).unwrap();
        // 1 is full and not current
        assert_eq!(e.remove_state(LayoutId(1)).unwrap(), Decision::Stay);
        assert_eq!(e.remove_state(LayoutId(0)).unwrap(), Decision::SwitchTo(LayoutId(2)));
        assert!(matches!(e.remove_state(LayoutId(7)), Err(Error::UnknownState(_))));
        assert!(matches!(e.remove_state(LayoutId(2)), Err(Error::NoStates)));
    }

    #[test]
    fn removing_the_last_active_state_starts_a_phase() {
        let mut e = Engine::new(EngineConfig::new(2.0, 5), ids(&[0, 1, 2]), Some(LayoutId(2))).unwrap();
        e.on_query(&costs(&[(0, 1.0), (1, 1.0), (2, 0.0)])).unwrap();
        e.on_query(&costs(&[(0, 1.0), (1, 1.0), (2, 0.0)])).unwrap();
        assert_eq!(e.active().len(), 1);
        let d = e.remove_state(LayoutId(2)).unwrap();
        assert!(matches!(d, Decision::PhaseReset(Move::SwitchTo(_))));
        assert_eq!(e.phase(), 1);
        assert_eq!(e.active().len(), 2);
    }

    #[test]
    fn bad_costs_are_rejected() {
        let mut e = Engine::new(EngineConfig::new(2.0, 0), ids(&[0, 1]), None).unwrap();
        assert!(matches!(e.on_query(&costs(&[(0, 1.5), (1, 0.0)])), Err(Error::CostOutOfRange { .. })));
        assert!(matches!(e.on_query(&costs(&[(0, f64::NAN), (1, 0.0)])), Err(Error::CostOutOfRange { .. })));
        assert!(matches!(e.on_query(&costs(&[(0, 0.5)])), Err(Error::MissingCost(LayoutId(1)))));
        assert!(Engine::new(EngineConfig::new(1.0, 0), ids(&[0]), None).is_err());
        assert!(matches!(Engine::new(EngineConfig::new(2.0, 0), ids(&[]), None), Err(Error::NoStates)));
    }

    #[test]
    fn same_seed_same_decisions() {
        let run = |seed| {
            let cfg = EngineConfig::new(3.0, seed).with_gamma(1.0);
            let mut e = Engine::new(cfg, ids(&[0, 1, 2, 3]), None).unwrap();
            let mut out = vec![e.current()];
            for t in 0..200u64 {
                let c: CostMap = (0..4).map(|s| (LayoutId(s), ((t * 7 + s * 3) % 5) as f64 / 4.0)).collect();
                e.on_query(&c).unwrap();
                out.push(e.current());
            }
            (out, e.counters_digest())
        };
        assert_eq!(run(11), run(11));
    }
}
