//! Holding several layouts at once: queries go to the cheapest held layout and
//! the held set is replaced only when all of its counters are full.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_costs, CostMap};
use crate::error::{Error, Result};
use crate::model::LayoutId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParallelVariant {
    /// Replace the held set once every held counter is full.
    AllFull,
    /// Replace a held layout as soon as any one fills. Not implemented.
    AnyFull,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParallelConfig {
    pub q: usize,
    pub alpha: f64,
    pub seed: u64,
    pub variant: ParallelVariant,
}

impl ParallelConfig {
    pub fn new(q: usize, alpha: f64, seed: u64) -> Self {
        ParallelConfig { q, alpha, seed, variant: ParallelVariant::AllFull }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParallelStep {
    pub served: Option<LayoutId>,
    pub cost: f64,
    /// Layouts built by this step; each costs one movement charge.
    pub loaded: Vec<LayoutId>,
    pub phase_reset: bool,
}

#[derive(Clone, Debug)]
pub struct ParallelEngine {
    config: ParallelConfig,
    states: BTreeSet<LayoutId>,
    active: BTreeSet<LayoutId>,
    counters: BTreeMap<LayoutId, f64>,
    deferred: BTreeSet<LayoutId>,
    held: BTreeSet<LayoutId>,
    phase: u64,
    rng: ChaCha8Rng,
}

fn pick_without_replacement(rng: &mut ChaCha8Rng, pool: &BTreeSet<LayoutId>, q: usize) -> Vec<LayoutId> {
    let mut pool: Vec<LayoutId> = pool.iter().copied().collect();
    let mut out = Vec::with_capacity(q);
    for _ in 0..q.min(pool.len()) {
        let i = rng.gen_range(0..pool.len());
        out.push(pool.swap_remove(i));
    }
    out
}

impl ParallelEngine {
    /// The initial held set is drawn uniformly; see [`ParallelEngine::held`].
    pub fn new(config: ParallelConfig, states: impl IntoIterator<Item = LayoutId>) -> Result<Self> {
        if config.variant == ParallelVariant::AnyFull {
            return Err(Error::Unsupported("replacing held layouts when any one fills"));
        }
        if !(config.alpha.is_finite() && config.alpha > 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must be > 1, got {}", config.alpha)));
        }
        let mut set = BTreeSet::new();
        for s in states {
            if !set.insert(s) {
                return Err(Error::DuplicateState(s));
            }
        }
        if set.is_empty() {
            return Err(Error::NoStates);
        }
        if config.q == 0 || config.q > set.len() {
            return Err(Error::InvalidParameter(format!("q = {} with {} states", config.q, set.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let held = pick_without_replacement(&mut rng, &set, config.q).into_iter().collect();
        Ok(ParallelEngine {
            config,
            counters: set.iter().map(|&s| (s, 0.0)).collect(),
            active: set.clone(),
            states: set,
            deferred: BTreeSet::new(),
            held,
            phase: 0,
            rng,
        })
    }

    pub fn held(&self) -> &BTreeSet<LayoutId> {
        &self.held
    }

    pub fn states(&self) -> &BTreeSet<LayoutId> {
        &self.states
    }

    pub fn active(&self) -> &BTreeSet<LayoutId> {
        &self.active
    }

    pub fn phase(&self) -> u64 {
        self.phase
    }

    pub fn counter(&self, id: LayoutId) -> Option<f64> {
        self.counters.get(&id).copied()
    }

    pub fn counters_digest(&self) -> String {
        super::fnv1a(
            std::iter::once(self.phase)
                .chain(self.held.iter().map(|h| h.0))
                .chain(self.counters.iter().flat_map(|(id, c)| [id.0, c.to_bits()])),
        )
    }

    /// Cheapest held layout counting this query's cost, ties to the lower id.
    fn serving_state(&self, costs: &CostMap) -> LayoutId {
        let mut best: Option<(f64, LayoutId)> = None;
        for &h in &self.held {
            let v = self.counters.get(&h).copied().unwrap_or(self.config.alpha) + costs[&h];
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, h));
            }
        }
        best.expect("held set is non-empty").1
    }

    fn refill(&mut self, step: &mut ParallelStep) {
        let q = self.config.q;
        let picks = if self.active.len() >= q {
            pick_without_replacement(&mut self.rng, &self.active, q)
        } else {
            self.phase += 1;
            step.phase_reset = true;
            self.active = self.states.clone();
            self.deferred.clear();
            self.counters = self.states.iter().map(|&s| (s, 0.0)).collect();
            pick_without_replacement(&mut self.rng, &self.states, q)
        };
        step.loaded.extend(picks.iter().filter(|p| !self.held.contains(p)));
        self.held = picks.into_iter().collect();
    }

    pub fn on_query(&mut self, costs: &CostMap) -> Result<ParallelStep> {
        check_costs(costs)?;
        if let Some(&missing) = self.active.iter().chain(&self.held).find(|s| !costs.contains_key(s)) {
            return Err(Error::MissingCost(missing));
        }
        let served = self.serving_state(costs);
        let mut step = ParallelStep { served: Some(served), cost: costs[&served], ..Default::default() };
        for id in &self.active {
            *self.counters.get_mut(id).expect("active states have counters") += costs[id];
        }
        let (alpha, counters) = (self.config.alpha, &self.counters);
        self.active.retain(|id| counters[id] < alpha);
        if self.held.iter().all(|h| !self.active.contains(h)) {
            self.refill(&mut step);
        }
        Ok(step)
    }

    pub fn add_state(&mut self, id: LayoutId) -> Result<()> {
        if !self.states.insert(id) {
            return Err(Error::DuplicateState(id));
        }
        self.deferred.insert(id);
        Ok(())
    }

    pub fn remove_state(&mut self, id: LayoutId) -> Result<ParallelStep> {
        if !self.states.contains(&id) {
            return Err(Error::UnknownState(id));
        }
        if self.states.len() <= self.config.q {
            return Err(Error::InvalidParameter(format!("removing {id} leaves fewer than q states")));
        }
        self.states.remove(&id);
        self.active.remove(&id);
        self.deferred.remove(&id);
        self.counters.remove(&id);
        let mut step = ParallelStep::default();
        if !self.held.remove(&id) {
            return Ok(step);
        }
        if self.held.iter().all(|h| !self.active.contains(h)) {
            self.refill(&mut step);
        } else {
            let spare: BTreeSet<LayoutId> = self.active.difference(&self.held).copied().collect();
            if let Some(&p) = pick_without_replacement(&mut self.rng, &spare, 1).first() {
                self.held.insert(p);
                step.loaded.push(p);
            }
        }
        Ok(step)
    }
}

fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability that `i` states remain unfilled once all of `q` states drawn
/// from `k` have filled, under a fixed fill order.
pub fn p_ikq(i: usize, k: usize, q: usize) -> f64 {
    if q == 0 || q > k || i > k - q {
        return 0.0;
    }
    binomial(k - i - 1, q - 1) / binomial(k, q)
}

/// Per-phase cost recurrence of the parallel policy, evaluated as an equality
/// with no cost for fewer than `q` remaining states.
pub fn parallel_q_expected_cost(k: usize, q: usize, alpha: f64) -> Result<f64> {
    if q == 0 || q > k {
        return Err(Error::InvalidParameter(format!("need 1 <= q <= k, got q = {q}, k = {k}")));
    }
    let mut f = vec![0.0; k + 1];
    for m in q..=k {
        let tail: f64 = (0..=m - q).map(|i| p_ikq(i, m, q) * f[i]).sum();
        f[m] = q as f64 * alpha + alpha + tail;
    }
    Ok(f[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(k: usize) -> f64 {
        (1..=k).map(|i| 1.0 / i as f64).sum()
    }

    #[test]
    fn recurrence_examples() {
        for k in 1..10 {
            let all = parallel_q_expected_cost(k, k, 10.0).unwrap();
            assert!((all - (k as f64 * 10.0 + 10.0)).abs() < 1e-9);
            for i in 0..k {
                assert!((p_ikq(i, k, 1) - 1.0 / k as f64).abs() < 1e-12);
            }
            // single layout: exactly twice alpha times the harmonic number
            let one = parallel_q_expected_cost(k, 1, 10.0).unwrap();
            assert!((one - 20.0 * harmonic(k)).abs() < 1e-9);
        }
        assert!(parallel_q_expected_cost(3, 4, 10.0).is_err());
        assert!(parallel_q_expected_cost(3, 0, 10.0).is_err());
        // f(2)=f(3)=3a, f(4)=3a+a*3/6... hand-evaluated for q=2
        assert!((parallel_q_expected_cost(4, 2, 10.0).unwrap() - 35.0).abs() < 1e-9);
    }

    #[test]
    fn remaining_count_distribution_sums_to_one() {
        for k in 1..12 {
            for q in 1..=k {
                let s: f64 = (0..=k - q).map(|i| p_ikq(i, k, q)).sum();
                assert!((s - 1.0).abs() < 1e-12, "k={k} q={q}");
            }
        }
    }

    #[test]
    fn holding_everything_never_moves_mid_phase() {
        let ids: Vec<LayoutId> = (0..4).map(LayoutId).collect();
        let mut e = ParallelEngine::new(ParallelConfig::new(4, 3.0, 9), ids.clone()).unwrap();
        let mut t = 0u64;
        loop {
            let costs: CostMap = ids.iter().map(|&s| (s, ((t + s.0 * 5) % 4) as f64 / 3.0)).collect();
            let step = e.on_query(&costs).unwrap();
            t += 1;
            if step.phase_reset {
                break;
            }
            assert!(step.loaded.is_empty());
        }
        assert!(t > 3);
    }

    #[test]
    fn serves_on_lowest_accumulated_cost() {
        let ids: Vec<LayoutId> = (0..2).map(LayoutId).collect();
        let mut e = ParallelEngine::new(ParallelConfig::new(2, 3.0, 1), ids).unwrap();
        let c = |a: f64, b: f64| -> CostMap { [(LayoutId(0), a), (LayoutId(1), b)].into_iter().collect() };
        let s = e.on_query(&c(1.0, 0.0)).unwrap();
        assert_eq!((s.served, s.cost), (Some(LayoutId(1)), 0.0));
        let s = e.on_query(&c(0.0, 0.5)).unwrap();
        assert_eq!(s.served, Some(LayoutId(1)));
        // 1.0 + 0.0 against 0.5 + 0.5: the tie goes to the lower id
        let s = e.on_query(&c(0.0, 0.5)).unwrap();
        assert_eq!(s.served, Some(LayoutId(0)));
    }

    #[test]
    fn any_full_variant_is_a_stub() {
        let mut cfg = ParallelConfig::new(1, 3.0, 0);
        cfg.variant = ParallelVariant::AnyFull;
        assert!(matches!(ParallelEngine::new(cfg, [LayoutId(0)]), Err(Error::Unsupported(_))));
        assert!(ParallelEngine::new(ParallelConfig::new(2, 3.0, 0), [LayoutId(0)]).is_err());
    }
}
