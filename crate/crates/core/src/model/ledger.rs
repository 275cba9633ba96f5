use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::layout::LayoutId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Query,
    Switch,
    Add,
    Remove,
    PhaseReset,
}

/// One line of the audit trail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub event: EventKind,
    pub state_id: LayoutId,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counters_digest: Option<String>,
    pub phase: u64,
    /// Service cost of every state available at this query. Only written on
    /// query events when instance recording is on; it is what the offline
    /// optimum is computed from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<BTreeMap<LayoutId, f64>>,
}

/// Cumulative query and reorganization cost plus the event log.
#[derive(Clone, Debug, PartialEq)]
pub struct CostLedger {
    alpha: f64,
    query_cost: f64,
    reorg_cost: f64,
    switches: u64,
    events: Vec<TraceEvent>,
}

impl CostLedger {
    pub fn new(alpha: f64) -> Self {
        CostLedger { alpha, query_cost: 0.0, reorg_cost: 0.0, switches: 0, events: Vec::new() }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn query_cost(&self) -> f64 {
        self.query_cost
    }

    pub fn reorg_cost(&self) -> f64 {
        self.reorg_cost
    }

    pub fn total_cost(&self) -> f64 {
        self.query_cost + self.reorg_cost
    }

    pub fn switches(&self) -> u64 {
        self.switches
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }

    pub fn record_query(
        &mut self,
        seq: u64,
        state: LayoutId,
        cost: f64,
        phase: u64,
        counters_digest: Option<String>,
        costs: Option<BTreeMap<LayoutId, f64>>,
    ) {
        self.query_cost += cost;
        self.events.push(TraceEvent {
            seq,
            event: EventKind::Query,
            state_id: state,
            cost,
            counters_digest,
            phase,
            costs,
        });
    }

    /// Books one movement charge of `alpha`.
    pub fn record_switch(&mut self, seq: u64, target: LayoutId, phase: u64, counters_digest: Option<String>) {
        self.reorg_cost += self.alpha;
        self.switches += 1;
        self.events.push(TraceEvent {
            seq,
            event: EventKind::Switch,
            state_id: target,
            cost: self.alpha,
            counters_digest,
            phase,
            costs: None,
        });
    }

    /// Zero-cost bookkeeping events (add, remove, phase reset).
    pub fn record_marker(&mut self, seq: u64, event: EventKind, state: LayoutId, phase: u64) {
        debug_assert!(!matches!(event, EventKind::Query | EventKind::Switch));
        self.events.push(TraceEvent {
            seq,
            event,
            state_id: state,
            cost: 0.0,
            counters_digest: None,
            phase,
            costs: None,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_reconcile_with_events() {
        let mut ledger = CostLedger::new(3.0);
        ledger.record_query(0, LayoutId(0), 0.25, 1, None, None);
        ledger.record_switch(0, LayoutId(1), 1, None);
        ledger.record_marker(1, EventKind::Add, LayoutId(2), 1);
        ledger.record_query(1, LayoutId(1), 0.5, 1, None, None);
        let sum: f64 = ledger.events().iter().filter(|e| e.event == EventKind::Query).map(|e| e.cost).sum();
        assert_eq!(ledger.query_cost(), sum);
        assert_eq!(ledger.reorg_cost(), 3.0 * ledger.switches() as f64);
        assert_eq!(ledger.total_cost(), 3.75);
    }
}
