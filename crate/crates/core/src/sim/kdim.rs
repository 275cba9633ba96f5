//! Point-query rounds over independent uniform columns, costed by box volume.
//!
//! Round `i` issues queries `col_i = x` with `x ~ U(0, 1)`. A layout is a set
//! of axis-aligned boxes covering the unit cube, and a query reads every box
//! whose extent on its column contains `x`, at a cost equal to the box's
//! volume (its share of uniformly distributed rows).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::layout::{build_qdtree, default_min_leaf_rows, PartitionBudget, QdNode, QdTree, QdTreeConfig};
use crate::model::{Column, Dataset, Op, Predicate, Query};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticKDimSpec {
    pub k: usize,
    pub partitions: usize,
    pub queries_per_round: usize,
}

impl SyntheticKDimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.partitions == 0 || self.queries_per_round == 0 {
            return Err(Error::Config("k, partitions and queries per round must be positive".into()));
        }
        Ok(())
    }

    /// Expected total when every round gets its own equal-width split.
    pub fn dynamic_expected(&self) -> f64 {
        (self.queries_per_round * self.k) as f64 / self.partitions as f64
    }

    /// Lower bound for any single fixed layout.
    pub fn static_lower_bound(&self) -> f64 {
        (self.queries_per_round * self.k) as f64 / (self.partitions as f64).powf(1.0 / self.k as f64)
    }
}

/// One side of a box edge: the bound value and whether it is attained.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Bound {
    v: f64,
    closed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    lo: Vec<Bound>,
    hi: Vec<Bound>,
}

impl Region {
    fn unit(k: usize) -> Region {
        Region { lo: vec![Bound { v: 0.0, closed: true }; k], hi: vec![Bound { v: 1.0, closed: true }; k] }
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h.v - l.v).max(0.0)).product()
    }

    pub fn contains(&self, col: usize, x: f64) -> bool {
        let (l, h) = (self.lo[col], self.hi[col]);
        (x > l.v || (l.closed && x == l.v)) && (x < h.v || (h.closed && x == h.v))
    }

    pub fn extent(&self, col: usize) -> (f64, f64) {
        (self.lo[col].v, self.hi[col].v)
    }

    fn tighten_hi(&mut self, col: usize, b: Bound) {
        let h = &mut self.hi[col];
        if b.v < h.v || (b.v == h.v && !b.closed) {
            *h = b;
        }
    }

    fn tighten_lo(&mut self, col: usize, b: Bound) {
        let l = &mut self.lo[col];
        if b.v > l.v || (b.v == l.v && !b.closed) {
            *l = b;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxLayout {
    pub regions: Vec<Region>,
}

impl BoxLayout {
    /// `parts` equal-width slabs along `col`.
    pub fn slabs(k: usize, col: usize, parts: usize) -> BoxLayout {
        let regions = (0..parts)
            .map(|i| {
                let mut r = Region::unit(k);
                r.lo[col] = Bound { v: i as f64 / parts as f64, closed: true };
                r.hi[col] = Bound { v: (i + 1) as f64 / parts as f64, closed: i + 1 == parts };
                r
            })
            .collect();
        BoxLayout { regions }
    }

    /// Leaf boxes of a tree whose cuts are range comparisons on numeric
    /// columns.
    pub fn from_qdtree(tree: &QdTree, k: usize) -> Result<BoxLayout> {
        let mut regions = Vec::new();
        let mut stack = vec![(0usize, Region::unit(k))];
        while let Some((i, region)) = stack.pop() {
            match &tree.nodes()[i] {
                QdNode::Leaf { .. } => regions.push(region),
                QdNode::Inner { cut, yes, no } => {
                    let (mut y, mut n) = (region.clone(), region);
                    match cut.op {
                        Op::Lt(v) => {
                            y.tighten_hi(cut.col, Bound { v, closed: false });
                            n.tighten_lo(cut.col, Bound { v, closed: true });
                        }
                        Op::Le(v) => {
                            y.tighten_hi(cut.col, Bound { v, closed: true });
                            n.tighten_lo(cut.col, Bound { v, closed: false });
                        }
                        _ => return Err(Error::Unsupported("box conversion handles only < and <= cuts")),
                    }
                    stack.push((*no, n));
                    stack.push((*yes, y));
                }
            }
        }
        Ok(BoxLayout { regions })
    }

    pub fn cost(&self, col: usize, x: f64) -> f64 {
        self.regions.iter().filter(|r| r.contains(col, x)).map(Region::volume).sum::<f64>().min(1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KDimInstance {
    pub spec: SyntheticKDimSpec,
    /// Query points per round; round `i` targets column `i`.
    pub rounds: Vec<Vec<f64>>,
}

pub fn gen_kdim_instance(spec: SyntheticKDimSpec, seed: u64) -> Result<KDimInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rounds = (0..spec.k).map(|_| (0..spec.queries_per_round).map(|_| rng.gen()).collect()).collect();
    Ok(KDimInstance { spec, rounds })
}

impl KDimInstance {
    pub fn workload(&self) -> Vec<Query> {
        let mut out = Vec::new();
        for (col, xs) in self.rounds.iter().enumerate() {
            for &x in xs {
                let seq = out.len() as u64;
                out.push(Query::new(seq, vec![Predicate::eq(col, x)]).with_template(col as u32));
            }
        }
        out
    }

    pub fn total_cost(&self, layout: &BoxLayout) -> f64 {
        self.rounds.iter().enumerate().map(|(col, xs)| xs.iter().map(|&x| layout.cost(col, x)).sum::<f64>()).sum()
    }

    /// Query cost when round `i` is served on slabs along column `i`.
    pub fn dynamic_total(&self) -> f64 {
        let (k, b) = (self.spec.k, self.spec.partitions);
        self.rounds
            .iter()
            .enumerate()
            .map(|(col, xs)| {
                let layout = BoxLayout::slabs(k, col, b);
                xs.iter().map(|&x| layout.cost(col, x)).sum::<f64>()
            })
            .sum()
    }

    /// One Qd-tree fitted to the whole workload over a uniform sample.
    pub fn static_layout(&self, sample_rows: usize, seed: u64) -> Result<BoxLayout> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = (0..self.spec.k)
            .map(|c| Column::numeric(format!("x{c}"), (0..sample_rows).map(|_| rng.gen()).collect()))
            .collect();
        let sample = Dataset::new(cols)?;
        let budget = PartitionBudget::new(self.spec.partitions)?;
        let cfg = QdTreeConfig::new(default_min_leaf_rows(sample_rows, budget));
        let tree = build_qdtree(&sample, &self.workload(), budget.get(), &cfg);
        BoxLayout::from_qdtree(&tree, self.spec.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slabs_cost_one_over_b() {
        let l = BoxLayout::slabs(3, 1, 4);
        assert!((l.cost(1, 0.3) - 0.25).abs() < 1e-12);
        assert!((l.cost(1, 0.25) - 0.25).abs() < 1e-12);
        assert!((l.cost(1, 1.0) - 0.25).abs() < 1e-12);
        // a column the slabs do not split reads everything
        assert!((l.cost(0, 0.3) - 1.0).abs() < 1e-12);
        let vol: f64 = l.regions.iter().map(Region::volume).sum();
        assert!((vol - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_match_closed_forms() {
        let s = SyntheticKDimSpec { k: 8, partitions: 64, queries_per_round: 500 };
        assert_eq!(s.dynamic_expected(), 62.5);
        assert!((s.static_lower_bound() - 4000.0 / 64f64.powf(0.125)).abs() < 1e-9);
        let inst = gen_kdim_instance(s, 1).unwrap();
        assert!((inst.dynamic_total() - 62.5).abs() < 1e-9);
    }

    #[test]
    fn tree_boxes_tile_the_cube() {
        let inst = gen_kdim_instance(SyntheticKDimSpec { k: 3, partitions: 16, queries_per_round: 50 }, 2).unwrap();
        let l = inst.static_layout(4000, 3).unwrap();
        assert_eq!(l.regions.len(), 16);
        let vol: f64 = l.regions.iter().map(Region::volume).sum();
        assert!((vol - 1.0).abs() < 1e-9);
        // every point lies in exactly one box along each axis slice
        for col in 0..3 {
            for x in [0.0, 0.1234, 0.5, 0.9, 1.0] {
                assert!(l.cost(col, x) > 0.0);
            }
        }
    }

    #[test]
    fn one_dimension_static_matches_dynamic() {
        let s = SyntheticKDimSpec { k: 1, partitions: 8, queries_per_round: 400 };
        let inst = gen_kdim_instance(s, 4).unwrap();
        let st = inst.total_cost(&inst.static_layout(8000, 5).unwrap());
        assert!((inst.dynamic_total() - 50.0).abs() < 1e-9);
        assert!((0.9 * 50.0..=1.5 * 50.0).contains(&st), "{st}");
    }
}
