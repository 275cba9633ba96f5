use std::collections::BTreeMap;

use crate::model::LayoutId;

/// Weights below this are clamped so every active state keeps a positive
/// probability for finite exponents.
pub const WEIGHT_FLOOR: f64 = 1e-9;

/// Biases the phase transition towards states that skipped more data in the
/// previous phase.
#[derive(Clone, Debug)]
pub struct TransitionPredictor {
    gamma: f64,
    /// Mean fraction skipped per state over the last completed phase.
    last_phase: BTreeMap<LayoutId, f64>,
    running: BTreeMap<LayoutId, (f64, u64)>,
}

impl TransitionPredictor {
    pub fn new(gamma: f64) -> Self {
        TransitionPredictor { gamma, last_phase: BTreeMap::new(), running: BTreeMap::new() }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn observe(&mut self, id: LayoutId, cost: f64) {
        let e = self.running.entry(id).or_insert((0.0, 0));
        e.0 += cost;
        e.1 += 1;
    }

    pub fn end_phase(&mut self) {
        self.last_phase =
            self.running.iter().map(|(&id, &(sum, n))| (id, 1.0 - sum / n as f64)).collect();
        self.running.clear();
    }

    pub fn forget(&mut self, id: LayoutId) {
        self.last_phase.remove(&id);
        self.running.remove(&id);
    }

    pub fn history(&self, id: LayoutId) -> Option<f64> {
        self.last_phase.get(&id).copied()
    }

    fn median_weight(&self) -> f64 {
        let mut w: Vec<f64> = self.last_phase.values().copied().collect();
        if w.is_empty() {
            return 1.0;
        }
        w.sort_by(f64::total_cmp);
        let m = w.len() / 2;
        if w.len() % 2 == 1 {
            w[m]
        } else {
            (w[m - 1] + w[m]) / 2.0
        }
    }

    pub fn weights(&self, ids: &[LayoutId]) -> Vec<f64> {
        let fallback = self.median_weight();
        ids.iter().map(|id| self.history(*id).unwrap_or(fallback)).collect()
    }

    /// Probabilities over `ids` in the given order, proportional to
    /// `weight^gamma`.
    pub fn distribution(&self, ids: &[LayoutId]) -> Vec<f64> {
        let n = ids.len();
        if n == 0 {
            return Vec::new();
        }
        if self.gamma == 0.0 {
            return vec![1.0 / n as f64; n];
        }
        let logs: Vec<f64> =
            self.weights(ids).iter().map(|w| self.gamma * w.max(WEIGHT_FLOOR).ln()).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / total).collect()
    }
}
