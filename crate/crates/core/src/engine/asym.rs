/// Cost of moving from the first state to the second; the reverse move is free.
pub const ASYM_FORWARD_MOVE: f64 = 1.0;

/// Exact expected cost of the counter algorithm on two states with
/// asymmetric movement, starting in the first state.
///
/// Both counters fill at the forward move cost. A state whose counter is
/// full is left for the other one; when both are full a new phase starts and
/// the next state is drawn uniformly. The position is tracked as a
/// probability pair instead of being sampled.
pub fn asym_two_state_policy(seq: &[(f64, f64)]) -> f64 {
    let mut run = AsymTwoState::new();
    for &(c0, c1) in seq {
        run.step(c0, c1);
    }
    run.expected_cost()
}

/// Step-at-a-time form of [`asym_two_state_policy`]; clone it to branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymTwoState {
    p: [f64; 2],
    counters: [f64; 2],
    active: [bool; 2],
    total: f64,
}

impl Default for AsymTwoState {
    fn default() -> Self {
        Self::new()
    }
}

impl AsymTwoState {
    pub fn new() -> Self {
        AsymTwoState { p: [1.0, 0.0], counters: [0.0; 2], active: [true; 2], total: 0.0 }
    }

    /// Probability of sitting in each state.
    pub fn position(&self) -> [f64; 2] {
        self.p
    }

    pub fn expected_cost(&self) -> f64 {
        self.total
    }

    pub fn step(&mut self, c0: f64, c1: f64) {
        let threshold = ASYM_FORWARD_MOVE;
        let [p0, p1] = self.p;
        self.total += p0 * c0 + p1 * c1;
        for (s, c) in [c0, c1].into_iter().enumerate() {
            if self.active[s] {
                self.counters[s] += c;
                self.active[s] = self.counters[s] < threshold;
            }
        }
        match self.active {
            [false, false] => {
                self.counters = [0.0; 2];
                self.active = [true; 2];
                self.total += p0 * 0.5 * ASYM_FORWARD_MOVE;
                self.p = [0.5, 0.5];
            }
            [false, true] => {
                self.total += p0 * ASYM_FORWARD_MOVE;
                self.p = [0.0, p0 + p1];
            }
            [true, false] => self.p = [p0 + p1, 0.0],
            [true, true] => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: cheapest schedule from the first state.
    fn opt(seq: &[(f64, f64)]) -> f64 {
        let mut d = [0.0, ASYM_FORWARD_MOVE];
        for &(c0, c1) in seq {
            let to0 = d[0].min(d[1]);
            let to1 = d[1].min(d[0] + ASYM_FORWARD_MOVE);
            d = [to0 + c0, to1 + c1];
        }
        d[0].min(d[1])
    }

    #[test]
    fn zero_costs_cost_nothing() {
        assert_eq!(asym_two_state_policy(&[(0.0, 0.0); 6]), 0.0);
        assert_eq!(asym_two_state_policy(&[(0.0, 1.0); 6]), 0.0);
    }

    #[test]
    fn single_forward_step() {
        // serve 1 in the first state, its counter fills, move forward for 1
        assert_eq!(asym_two_state_policy(&[(1.0, 0.0)]), 2.0);
        assert_eq!(opt(&[(1.0, 0.0)]), 1.0);
    }

    #[test]
    fn both_full_resets_uniformly() {
        // both fill on the first step: serve 1, then half the mass moves forward
        assert_eq!(asym_two_state_policy(&[(1.0, 1.0)]), 1.5);
        // second step: expected service 1, then reset again from (0.5, 0.5)
        assert_eq!(asym_two_state_policy(&[(1.0, 1.0), (1.0, 1.0)]), 1.5 + 1.0 + 0.25);
    }

    #[test]
    fn short_sequences_stay_within_six_times_optimal() {
        let vals = [0.0, 0.5, 1.0];
        let steps: Vec<(f64, f64)> = vals.iter().flat_map(|&a| vals.iter().map(move |&b| (a, b))).collect();
        let mut seq = Vec::new();
        fn walk(seq: &mut Vec<(f64, f64)>, steps: &[(f64, f64)], depth: usize) {
            let alg = asym_two_state_policy(seq);
            assert!(alg >= opt(seq) - 1e-12);
            assert!(alg <= 6.0 * opt(seq) + 1e-9, "{seq:?}");
            if depth == 0 {
                return;
            }
            for &s in steps {
                seq.push(s);
                walk(seq, steps, depth - 1);
                seq.pop();
            }
        }
        walk(&mut seq, &steps, 4);
    }
}
