//! Line-delimited JSON traces and the offline optimum over a recorded run.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::engine::CostMap;
use crate::error::{Error, Result};
use crate::model::{EventKind, TraceEvent};
use crate::policy::{offline_opt_from_costs, DpSolution};

pub fn write_trace<W: Write>(events: &[TraceEvent], mut out: W) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n").map_err(|err| Error::io("<trace>", err))?;
    }
    Ok(())
}

pub fn save_trace(events: &[TraceEvent], path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_trace(events, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trace<R: BufRead>(input: R, source: &str) -> Result<Vec<TraceEvent>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|err| Error::Parse {
            path: source.to_string(),
            line: i + 1,
            msg: err.to_string(),
        })?;
        out.push(e);
    }
    Ok(out)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceEvent>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(BufReader::new(f), &path.display().to_string())
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TraceTotals {
    pub queries: usize,
    pub query_cost: f64,
    pub reorg_cost: f64,
    pub switches: u64,
}

impl TraceTotals {
    pub fn total(&self) -> f64 {
        self.query_cost + self.reorg_cost
    }
}

pub fn trace_totals(events: &[TraceEvent]) -> TraceTotals {
    let mut t = TraceTotals::default();
    for e in events {
        match e.event {
            EventKind::Query => {
                t.queries += 1;
                t.query_cost += e.cost;
            }
            EventKind::Switch => {
                t.switches += 1;
                t.reorg_cost += e.cost;
            }
            _ => {}
        }
    }
    t
}

/// Movement cost of a trace, read off its first switch event.
pub fn trace_alpha(events: &[TraceEvent]) -> Option<f64> {
    events.iter().find(|e| e.event == EventKind::Switch).map(|e| e.cost)
}

/// Per-query cost rows of a trace recorded with per-state costs.
pub fn trace_instance(events: &[TraceEvent]) -> Result<Vec<CostMap>> {
    events
        .iter()
        .filter(|e| e.event == EventKind::Query)
        .map(|e| {
            e.costs.clone().ok_or_else(|| {
                Error::InvalidParameter(format!("query {} has no per-state costs; record them with record_costs", e.seq))
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub online: TraceTotals,
    pub optimum: DpSolution,
    /// Online total over the optimum; infinite when the optimum is 0 and the
    /// online run paid anything.
    pub ratio: f64,
}

pub fn oracle_from_trace(events: &[TraceEvent], alpha: f64) -> Result<OracleReport> {
    let rows = trace_instance(events)?;
    let optimum = offline_opt_from_costs(&rows, alpha, None)?;
    let online = trace_totals(events);
    let ratio = if optimum.total > 0.0 {
        online.total() / optimum.total
    } else if online.total() > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Ok(OracleReport { online, optimum, ratio })
}
