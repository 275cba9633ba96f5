use std::collections::{BTreeMap, BTreeSet};

use crate::engine::CostMap;
use crate::error::{Error, Result};
use crate::model::LayoutId;

#[derive(Clone, Debug, PartialEq)]
pub struct DpSolution {
    pub total: f64,
    /// State occupied while serving each event.
    pub path: Vec<LayoutId>,
    pub switches: usize,
}

fn argmin(values: &BTreeMap<LayoutId, f64>) -> (LayoutId, f64) {
    let mut best: Option<(LayoutId, f64)> = None;
    for (&id, &v) in values {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((id, v));
        }
    }
    best.expect("non-empty availability")
}

/// Cheapest offline schedule over a uniform switching cost `alpha`.
///
/// `start` pins the state before the first event (leaving it costs
/// `alpha`); with `None` the first state is free. Ties prefer staying, then
/// the lower id.
pub fn offline_opt_dp(
    costs: &[CostMap],
    availability: &[BTreeSet<LayoutId>],
    alpha: f64,
    start: Option<LayoutId>,
) -> Result<DpSolution> {
    if costs.len() != availability.len() {
        return Err(Error::InvalidParameter(format!(
            "{} cost rows but {} availability sets",
            costs.len(),
            availability.len()
        )));
    }
    for (t, (row, avail)) in costs.iter().zip(availability).enumerate() {
        if avail.is_empty() {
            return Err(Error::NoStates);
        }
        if let Some(&state) = row.keys().find(|s| !avail.contains(s)) {
            return Err(Error::OutsideAvailability { event: t, state });
        }
        if let Some(&s) = avail.iter().find(|s| !row.contains_key(s)) {
            return Err(Error::MissingCost(s));
        }
    }
    if costs.is_empty() {
        return Ok(DpSolution { total: 0.0, path: Vec::new(), switches: 0 });
    }
    let mut pred: Vec<BTreeMap<LayoutId, LayoutId>> = Vec::with_capacity(costs.len());
    let mut d: BTreeMap<LayoutId, f64> = costs[0]
        .iter()
        .map(|(&s, &c)| (s, c + if start.is_some_and(|s0| s0 != s) { alpha } else { 0.0 }))
        .collect();
    pred.push(BTreeMap::new());
    for row in &costs[1..] {
        let (best_id, best) = argmin(&d);
        let mut next = BTreeMap::new();
        let mut back = BTreeMap::new();
        for (&s, &c) in row {
            let switch = alpha + best;
            let (from, v) = match d.get(&s) {
                Some(&stay) if stay <= switch => (s, stay),
                _ => (best_id, switch),
            };
            next.insert(s, c + v);
            back.insert(s, from);
        }
        d = next;
        pred.push(back);
    }
    let (mut s, total) = argmin(&d);
    let mut path = vec![s; costs.len()];
    for t in (1..costs.len()).rev() {
        path[t] = s;
        s = pred[t][&s];
    }
    path[0] = s;
    let switches = path.windows(2).filter(|w| w[0] != w[1]).count() + start.is_some_and(|s0| s0 != path[0]) as usize;
    Ok(DpSolution { total, path, switches })
}

/// Same as [`offline_opt_dp`] with availability taken from the cost rows.
pub fn offline_opt_from_costs(costs: &[CostMap], alpha: f64, start: Option<LayoutId>) -> Result<DpSolution> {
    let avail: Vec<BTreeSet<LayoutId>> = costs.iter().map(|r| r.keys().copied().collect()).collect();
    offline_opt_dp(costs, &avail, alpha, start)
}

/// Cheapest schedule on two states where moving from the first to the second
/// costs `forward` and moving back is free, starting in the first.
pub fn two_state_asym_opt(seq: &[(f64, f64)], forward: f64) -> f64 {
    let mut dp = AsymOpt::new(forward);
    for &(c0, c1) in seq {
        dp.step(c0, c1);
    }
    dp.value()
}

/// Step-at-a-time form of [`two_state_asym_opt`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymOpt {
    forward: f64,
    /// Cheapest cost so far ending in each state.
    ending: [f64; 2],
}

impl AsymOpt {
    pub fn new(forward: f64) -> Self {
        AsymOpt { forward, ending: [0.0, forward] }
    }

    pub fn step(&mut self, c0: f64, c1: f64) {
        let [d0, d1] = self.ending;
        self.ending = [d0.min(d1) + c0, d1.min(d0 + self.forward) + c1];
    }

    pub fn value(&self) -> f64 {
        self.ending[0].min(self.ending[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rows(v: &[&[f64]]) -> Vec<CostMap> {
        v.iter().map(|r| r.iter().enumerate().map(|(i, &c)| (LayoutId(i as u64), c)).collect()).collect()
    }

    // Exhaustive oracle over every state path.
    fn brute(costs: &[Vec<f64>], alpha: f64) -> f64 {
        let n = costs[0].len();
        let t = costs.len();
        let mut best = f64::INFINITY;
        for code in 0..n.pow(t as u32) {
            let mut c = code;
            let mut prev = None;
            let mut total = 0.0;
            for row in costs {
                let s = c % n;
                c /= n;
                if prev.is_some_and(|p| p != s) {
                    total += alpha;
                }
                total += row[s];
                prev = Some(s);
            }
            best = best.min(total);
        }
        best
    }

    #[test]
    fn single_state_sums_costs() {
        let sol = offline_opt_from_costs(&rows(&[&[0.5], &[0.25], &[1.0]]), 5.0, None).unwrap();
        assert_eq!((sol.total, sol.switches), (1.75, 0));
    }

    #[test]
    fn expensive_switching_closed_form() {
        let t = 30;
        let c = rows(&vec![&[1.0, 0.0][..]; t]);
        let free = offline_opt_from_costs(&c, 1e6, None).unwrap();
        assert_eq!(free.total, 0.0);
        assert!(free.path.iter().all(|&s| s == LayoutId(1)));
        for alpha in [5.0, 100.0] {
            let pinned = offline_opt_from_costs(&c, alpha, Some(LayoutId(0))).unwrap();
            assert_eq!(pinned.total, (t as f64).min(alpha));
        }
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let n = rng.gen_range(1..=4);
            let t = rng.gen_range(1..=8);
            let alpha = rng.gen_range(0.1..3.0);
            let raw: Vec<Vec<f64>> = (0..t).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
            let c: Vec<CostMap> =
                raw.iter().map(|r| r.iter().enumerate().map(|(i, &v)| (LayoutId(i as u64), v)).collect()).collect();
            let sol = offline_opt_from_costs(&c, alpha, None).unwrap();
            assert!((sol.total - brute(&raw, alpha)).abs() < 1e-9);
            // the path realizes the total
            let realized: f64 = sol.path.iter().enumerate().map(|(i, s)| c[i][s]).sum::<f64>()
                + alpha * sol.switches as f64;
            assert!((realized - sol.total).abs() < 1e-9);
        }
    }

    #[test]
    fn ties_prefer_staying_then_lower_id() {
        let sol = offline_opt_from_costs(&rows(&[&[0.0, 0.0], &[0.0, 0.0]]), 1.0, None).unwrap();
        assert_eq!(sol.path, vec![LayoutId(0), LayoutId(0)]);
        let sol = offline_opt_from_costs(&rows(&[&[1.0, 0.0], &[0.0, 1.0]]), 1.0, None).unwrap();
        assert_eq!(sol.switches, 0);
    }

    #[test]
    fn availability_is_enforced() {
        let c = rows(&[&[0.0, 0.0]]);
        let avail = vec![[LayoutId(0)].into_iter().collect()];
        assert!(matches!(offline_opt_dp(&c, &avail, 1.0, None), Err(Error::OutsideAvailability { .. })));
        let avail = vec![[LayoutId(0), LayoutId(1), LayoutId(2)].into_iter().collect()];
        assert!(matches!(offline_opt_dp(&c, &avail, 1.0, None), Err(Error::MissingCost(_))));
    }

    #[test]
    fn dynamic_availability() {
        // state 1 only exists for the middle events
        let c: Vec<CostMap> = vec![
            [(LayoutId(0), 1.0)].into_iter().collect(),
            [(LayoutId(0), 1.0), (LayoutId(1), 0.0)].into_iter().collect(),
            [(LayoutId(0), 1.0), (LayoutId(1), 0.0)].into_iter().collect(),
            [(LayoutId(0), 1.0)].into_iter().collect(),
        ];
        let sol = offline_opt_from_costs(&c, 0.5, None).unwrap();
        assert_eq!(sol.path, vec![LayoutId(0), LayoutId(1), LayoutId(1), LayoutId(0)]);
        assert_eq!(sol.total, 3.0);
    }

    #[test]
    fn asymmetric_two_state() {
        assert_eq!(two_state_asym_opt(&[(1.0, 0.0)], 1.0), 1.0);
        assert_eq!(two_state_asym_opt(&[(1.0, 0.0), (1.0, 0.0)], 1.0), 1.0);
        assert_eq!(two_state_asym_opt(&[(0.0, 1.0)], 1.0), 0.0);
        // going forward, back for free, then forward again costs two moves
        assert_eq!(two_state_asym_opt(&[(1.0, 0.0), (0.0, 1.0), (1.0, 0.0)], 1.0), 2.0);
    }
}
