use std::collections::BTreeMap;

use crate::engine::Decision;
use crate::model::{query_cost, Layout, LayoutId, Query};

/// Cumulative savings of each candidate against the current layout since the
/// last switch.
#[derive(Clone, Debug, Default)]
pub struct RegretLedger {
    savings: BTreeMap<LayoutId, f64>,
    history: Vec<Query>,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn savings(&self, id: LayoutId) -> Option<f64> {
        self.savings.get(&id).copied()
    }

    /// Queries served on the current layout since the last switch.
    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Drop entries for candidates that are gone; a new candidate enters with
    /// its savings over the queries already served on `current`.
    fn sync<L: AsRef<Layout>>(&mut self, current: &Layout, candidates: &[L]) {
        self.savings.retain(|id, _| candidates.iter().any(|c| c.as_ref().id == *id));
        for c in candidates {
            let c = c.as_ref();
            if c.id == current.id || self.savings.contains_key(&c.id) {
                continue;
            }
            let s = self.history.iter().map(|q| query_cost(current, q) - query_cost(c, q)).sum();
            self.savings.insert(c.id, s);
        }
        self.savings.remove(&current.id);
    }

    fn settle(&mut self, alpha: f64) -> Decision {
        let mut best: Option<(LayoutId, f64)> = None;
        for (&id, &s) in &self.savings {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((id, s));
            }
        }
        match best {
            Some((id, s)) if s > alpha => {
                // savings were measured against the layout being left
                self.savings.values_mut().for_each(|v| *v = 0.0);
                self.savings.remove(&id);
                self.history.clear();
                Decision::SwitchTo(id)
            }
            _ => Decision::Stay,
        }
    }

    /// Serve `query` on `current`, update savings and switch once the best
    /// candidate has saved more than `alpha`.
    pub fn step<L: AsRef<Layout>>(&mut self, current: &Layout, candidates: &[L], query: &Query, alpha: f64) -> Decision {
        self.sync(current, candidates);
        let here = query_cost(current, query);
        for c in candidates {
            let c = c.as_ref();
            if let Some(s) = self.savings.get_mut(&c.id) {
                *s += here - query_cost(c, query);
            }
        }
        self.history.push(query.clone());
        self.settle(alpha)
    }

    #[cfg(test)]
    fn step_costs(&mut self, here: f64, others: &BTreeMap<LayoutId, f64>, alpha: f64) -> Decision {
        for (id, c) in others {
            *self.savings.entry(*id).or_insert(0.0) += here - c;
        }
        self.settle(alpha)
    }
}
