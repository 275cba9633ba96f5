use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::Query;

struct Entry {
    score: f64,
    query: Query,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then(self.query.seq.cmp(&other.query.seq))
    }
}

/// Weighted reservoir where an item arriving at time `t` has weight
/// `exp(lambda * t)`, so older items fade out.
///
/// Implemented as exponential-key sampling: each item draws `E ~ Exp(1)` and
/// the reservoir keeps the `capacity` smallest `ln E - lambda * t`. With
/// `lambda = 0` this is a uniform sample without replacement; a large
/// `lambda` keeps the most recent items.
pub struct TimeBiasedReservoir {
    capacity: usize,
    lambda: f64,
    rng: ChaCha8Rng,
    heap: BinaryHeap<Entry>,
}

impl TimeBiasedReservoir {
    pub fn new(capacity: usize, lambda: f64, seed: u64) -> Self {
        TimeBiasedReservoir { capacity, lambda, rng: ChaCha8Rng::seed_from_u64(seed), heap: BinaryHeap::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn push(&mut self, query: Query, now: u64) {
        let u: f64 = self.rng.gen();
        let e = -(1.0 - u).ln();
        let score = e.ln() - self.lambda * now as f64;
        if self.heap.len() < self.capacity {
            self.heap.push(Entry { score, query });
        } else if self.heap.peek().is_some_and(|top| score < top.score) {
            self.heap.pop();
            self.heap.push(Entry { score, query });
        }
    }

    /// Current items in arrival order.
    pub fn items(&self) -> Vec<Query> {
        let mut v: Vec<Query> = self.heap.iter().map(|e| e.query.clone()).collect();
        v.sort_by_key(|q| q.seq);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn under_capacity_keeps_everything() {
        let mut r = TimeBiasedReservoir::new(10, 0.5, 1);
        for s in 0..10 {
            r.push(Query::new(s, vec![]), s);
        }
        assert_eq!(r.items().iter().map(|q| q.seq).collect::<Vec<_>>(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn zero_decay_is_uniform() {
        let (n, cap, trials) = (50u64, 10usize, 10_000u64);
        let mut hits = vec![0u64; n as usize];
        for t in 0..trials {
            let mut r = TimeBiasedReservoir::new(cap, 0.0, t);
            for s in 0..n {
                r.push(Query::new(s, vec![]), s);
            }
            for q in r.items() {
                hits[q.seq as usize] += 1;
            }
        }
        let expected = trials as f64 * cap as f64 / n as f64;
        let chi2: f64 = hits.iter().map(|&h| (h as f64 - expected).powi(2) / expected).sum();
        let critical = ChiSquared::new((n - 1) as f64).unwrap().inverse_cdf(0.999);
        assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
    }

    #[test]
    fn strong_decay_tracks_the_window() {
        let (n, cap) = (1000u64, 64usize);
        let mut overlap = 0usize;
        let trials = 200;
        for t in 0..trials {
            let mut r = TimeBiasedReservoir::new(cap, 5.0, t);
            for s in 0..n {
                r.push(Query::new(s, vec![]), s);
            }
            overlap += r.items().iter().filter(|q| q.seq >= n - cap as u64).count();
        }
        let frac = overlap as f64 / (trials * cap as u64) as f64;
        assert!(frac >= 0.95, "{frac}");
    }

    #[test]
    fn reproducible_under_seed() {
        let run = |seed| {
            let mut r = TimeBiasedReservoir::new(16, 0.01, seed);
            for s in 0..500 {
                r.push(Query::new(s, vec![]), s);
            }
            r.items()
        };
        assert_eq!(run(4), run(4));
    }
}
