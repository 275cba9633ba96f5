//! Greedy Qd-tree construction.
//!
//! Candidate cuts come from the workload's predicates. Each step splits the
//! leaf whose best cut skips the most additional sample rows over the
//! construction workload, until the partition budget is reached or no cut
//! keeps both children at `min_leaf_rows`.

use serde::{Deserialize, Serialize};

use crate::model::{ColumnKind, Dataset, Op, Predicate, Query, DEFAULT_DISTINCT_CAP};

#[derive(Clone, Debug, PartialEq)]
pub enum QdNode {
    /// Records satisfying `cut` go to `yes`, the rest to `no`.
    Inner { cut: Predicate, yes: usize, no: usize },
    Leaf { partition: usize },
}

/// Binary decision tree over workload predicates. Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QdTreeRecord", into = "QdTreeRecord")]
pub struct QdTree {
    nodes: Vec<QdNode>,
    leaf_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum TreeToken {
    Cut(Predicate),
    Leaf(usize),
}

/// Preorder token list: a cut is followed by its `yes` then its `no` subtree.
#[derive(Serialize, Deserialize)]
struct QdTreeRecord {
    tree: Vec<TreeToken>,
}

impl From<QdTree> for QdTreeRecord {
    fn from(t: QdTree) -> Self {
        let mut tree = Vec::with_capacity(t.nodes.len());
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match &t.nodes[i] {
                QdNode::Inner { cut, yes, no } => {
                    tree.push(TreeToken::Cut(cut.clone()));
                    stack.push(*no);
                    stack.push(*yes);
                }
                QdNode::Leaf { partition } => tree.push(TreeToken::Leaf(*partition)),
            }
        }
        QdTreeRecord { tree }
    }
}

impl TryFrom<QdTreeRecord> for QdTree {
    type Error = String;

    fn try_from(r: QdTreeRecord) -> Result<Self, String> {
        fn parse(tokens: &mut std::slice::Iter<'_, TreeToken>, nodes: &mut Vec<QdNode>) -> Result<usize, String> {
            let idx = nodes.len();
            match tokens.next() {
                None => Err("truncated tree".to_string()),
                Some(TreeToken::Leaf(p)) => {
                    nodes.push(QdNode::Leaf { partition: *p });
                    Ok(idx)
                }
                Some(TreeToken::Cut(cut)) => {
                    nodes.push(QdNode::Leaf { partition: usize::MAX });
                    let yes = parse(tokens, nodes)?;
                    let no = parse(tokens, nodes)?;
                    nodes[idx] = QdNode::Inner { cut: cut.clone(), yes, no };
                    Ok(idx)
                }
            }
        }
        let mut nodes = Vec::with_capacity(r.tree.len());
        let mut tokens = r.tree.iter();
        parse(&mut tokens, &mut nodes)?;
        if tokens.next().is_some() {
            return Err("trailing tokens after tree".to_string());
        }
        let mut seen: Vec<usize> = nodes
            .iter()
            .filter_map(|n| match n {
                QdNode::Leaf { partition } => Some(*partition),
                QdNode::Inner { .. } => None,
            })
            .collect();
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(i, &p)| i != p) {
            return Err("leaf partitions must be 0..leaf_count".to_string());
        }
        Ok(QdTree { leaf_count: seen.len(), nodes })
    }
}

impl QdTree {
    pub fn single() -> Self {
        QdTree { nodes: vec![QdNode::Leaf { partition: 0 }], leaf_count: 1 }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn nodes(&self) -> &[QdNode] {
        &self.nodes
    }

    pub fn cuts(&self) -> impl Iterator<Item = &Predicate> {
        self.nodes.iter().filter_map(|n| match n {
            QdNode::Inner { cut, .. } => Some(cut),
            QdNode::Leaf { .. } => None,
        })
    }

    pub fn route<F: Fn(usize) -> f64>(&self, value: F) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                QdNode::Inner { cut, yes, no } => i = if cut.op.eval(value(cut.col)) { *yes } else { *no },
                QdNode::Leaf { partition } => return *partition,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QdTreeConfig {
    pub min_leaf_rows: usize,
    /// Construction workload is thinned to at most this many queries by an
    /// even stride.
    pub max_queries: usize,
    /// Candidate cut list is thinned to at most this many cuts by an even stride.
    pub max_cuts: usize,
    pub distinct_cap: usize,
}

impl QdTreeConfig {
    pub fn new(min_leaf_rows: usize) -> Self {
        QdTreeConfig { min_leaf_rows: min_leaf_rows.max(1), max_queries: 2048, max_cuts: 1024, distinct_cap: DEFAULT_DISTINCT_CAP }
    }
}

/// Boundary cuts implied by the workload's predicates, deduplicated and in a
/// deterministic order. `Lt(v)` separates `< v` from `>= v`; `Le(v)` separates
/// `<= v` from `> v`; `Eq(v)` isolates one value.
pub fn candidate_cuts(workload: &[Query], kinds: &[ColumnKind]) -> Vec<Predicate> {
    let mut cuts = Vec::new();
    for q in workload {
        for p in &q.predicates {
            let Some(kind) = kinds.get(p.col) else { continue };
            let c = p.col;
            match (&p.op, kind) {
                (Op::Eq(v), ColumnKind::Categorical) => cuts.push(Predicate::new(c, Op::Eq(*v))),
                (Op::Eq(v), ColumnKind::Numeric) => {
                    cuts.push(Predicate::new(c, Op::Lt(*v)));
                    cuts.push(Predicate::new(c, Op::Le(*v)));
                }
                (Op::Lt(v) | Op::Ge(v), _) => cuts.push(Predicate::new(c, Op::Lt(*v))),
                (Op::Le(v) | Op::Gt(v), _) => cuts.push(Predicate::new(c, Op::Le(*v))),
                (Op::Between(lo, hi), _) => {
                    cuts.push(Predicate::new(c, Op::Lt(*lo)));
                    cuts.push(Predicate::new(c, Op::Le(*hi)));
                }
                (Op::In(set), _) => cuts.extend(set.iter().map(|v| Predicate::new(c, Op::Eq(*v)))),
            }
        }
    }
    let rank = |op: &Op| match op {
        Op::Lt(_) => 0,
        Op::Le(_) => 1,
        _ => 2,
    };
    let value = |op: &Op| op.operands()[0];
    cuts.sort_by(|a, b| {
        a.col.cmp(&b.col).then(rank(&a.op).cmp(&rank(&b.op))).then(value(&a.op).total_cmp(&value(&b.op)))
    });
    cuts.dedup();
    cuts
}

fn thin<T: Clone>(items: &[T], max: usize) -> Vec<T> {
    if items.len() <= max || max == 0 {
        return items.to_vec();
    }
    (0..max).map(|i| items[i * items.len() / max].clone()).collect()
}

/// Construction-time summary of one column over a set of sample rows.
#[derive(Clone, Copy, Debug)]
enum Sketch {
    Num { min: f64, max: f64 },
    Cat { bits: u128, overflow: bool },
}

impl Sketch {
    fn of(kind: ColumnKind, v: f64) -> Sketch {
        match kind {
            ColumnKind::Numeric => Sketch::Num { min: v, max: v },
            ColumnKind::Categorical => {
                // Codes beyond the bitset width are treated as "anything possible".
                if v < 128.0 {
                    Sketch::Cat { bits: 1u128 << (v as u32), overflow: false }
                } else {
                    Sketch::Cat { bits: 0, overflow: true }
                }
            }
        }
    }

    #[inline]
    fn merge(self, other: Sketch, cap: usize) -> Sketch {
        match (self, other) {
            (Sketch::Num { min: a, max: b }, Sketch::Num { min: c, max: d }) => Sketch::Num { min: a.min(c), max: b.max(d) },
            (Sketch::Cat { bits: a, overflow: x }, Sketch::Cat { bits: b, overflow: y }) => {
                let bits = a | b;
                Sketch::Cat { bits, overflow: x || y || bits.count_ones() as usize > cap }
            }
            _ => unreachable!("sketch kinds are per column"),
        }
    }

    #[inline]
    fn may_satisfy(&self, op: &Op) -> bool {
        match *self {
            Sketch::Num { min, max } => op.overlaps(min, max),
            Sketch::Cat { overflow: true, .. } => true,
            Sketch::Cat { mut bits, .. } => {
                while bits != 0 {
                    let code = bits.trailing_zeros();
                    if op.eval(f64::from(code)) {
                        return true;
                    }
                    bits &= bits - 1;
                }
                false
            }
        }
    }
}

struct Builder<'a> {
    sample: &'a Dataset,
    kinds: Vec<ColumnKind>,
    queries: Vec<Query>,
    cuts: Vec<Predicate>,
    cuts_by_col: Vec<Vec<usize>>,
    /// Columns any query references; only these need sketches.
    query_cols: Vec<usize>,
    slot: Vec<usize>,
    config: QdTreeConfig,
}

#[derive(Clone, Copy)]
struct Split {
    gain: u64,
    cut: usize,
}

impl<'a> Builder<'a> {
    fn sketch_rows(&self, rows: impl Iterator<Item = u32>) -> Vec<Sketch> {
        let mut acc: Vec<Option<Sketch>> = vec![None; self.query_cols.len()];
        for r in rows {
            for (s, &c) in self.query_cols.iter().enumerate() {
                let sk = Sketch::of(self.kinds[c], self.sample.value(r as usize, c));
                acc[s] = Some(match acc[s] {
                    Some(prev) => prev.merge(sk, self.config.distinct_cap),
                    None => sk,
                });
            }
        }
        acc.into_iter().map(|s| s.expect("non-empty row set")).collect()
    }

    #[inline]
    fn matches(&self, q: &Query, sketches: &[Sketch]) -> bool {
        q.predicates.iter().all(|p| sketches[self.slot[p.col]].may_satisfy(&p.op))
    }

    fn best_split(&self, rows: &[u32]) -> Option<Split> {
        let n = rows.len();
        let min = self.config.min_leaf_rows;
        if n < 2 * min || n < 2 {
            return None;
        }
        let parent = self.sketch_rows(rows.iter().copied());
        let relevant: Vec<&Query> = self.queries.iter().filter(|q| self.matches(q, &parent)).collect();
        if relevant.is_empty() {
            return None;
        }
        let width = self.query_cols.len();
        let mut best: Option<Split> = None;
        let mut consider = |gain: u64, cut: usize| {
            if gain > 0 && best.is_none_or(|b| gain > b.gain) {
                best = Some(Split { gain, cut });
            }
        };

        let mut sorted: Vec<u32> = rows.to_vec();
        let mut prefix: Vec<Sketch> = Vec::new();
        let mut suffix: Vec<Sketch> = Vec::new();
        for (col, cut_ids) in self.cuts_by_col.iter().enumerate() {
            if cut_ids.is_empty() {
                continue;
            }
            let has_range_cut = cut_ids.iter().any(|&i| matches!(self.cuts[i].op, Op::Lt(_) | Op::Le(_)));
            if has_range_cut {
                sorted.sort_by(|&a, &b| {
                    self.sample.value(a as usize, col).total_cmp(&self.sample.value(b as usize, col)).then(a.cmp(&b))
                });
                let values: Vec<f64> = sorted.iter().map(|&r| self.sample.value(r as usize, col)).collect();
                prefix.clear();
                suffix.clear();
                prefix.resize(n * width, Sketch::Num { min: 0.0, max: 0.0 });
                suffix.resize(n * width, Sketch::Num { min: 0.0, max: 0.0 });
                for (i, &r) in sorted.iter().enumerate() {
                    for (s, &c) in self.query_cols.iter().enumerate() {
                        let sk = Sketch::of(self.kinds[c], self.sample.value(r as usize, c));
                        prefix[i * width + s] =
                            if i == 0 { sk } else { prefix[(i - 1) * width + s].merge(sk, self.config.distinct_cap) };
                    }
                }
                for (i, &r) in sorted.iter().enumerate().rev() {
                    for (s, &c) in self.query_cols.iter().enumerate() {
                        let sk = Sketch::of(self.kinds[c], self.sample.value(r as usize, c));
                        suffix[i * width + s] =
                            if i + 1 == n { sk } else { suffix[(i + 1) * width + s].merge(sk, self.config.distinct_cap) };
                    }
                }
                for &ci in cut_ids {
                    let split = match self.cuts[ci].op {
                        Op::Lt(v) => values.partition_point(|x| *x < v),
                        Op::Le(v) => values.partition_point(|x| *x <= v),
                        _ => continue,
                    };
                    if split < min || n - split < min {
                        continue;
                    }
                    let yes = &prefix[(split - 1) * width..split * width];
                    let no = &suffix[split * width..(split + 1) * width];
                    let gain: u64 = relevant
                        .iter()
                        .map(|q| {
                            let mut g = 0;
                            if !self.matches(q, yes) {
                                g += split as u64;
                            }
                            if !self.matches(q, no) {
                                g += (n - split) as u64;
                            }
                            g
                        })
                        .sum();
                    consider(gain, ci);
                }
            }
            for &ci in cut_ids {
                let Op::Eq(v) = self.cuts[ci].op else { continue };
                let (yes_rows, no_rows): (Vec<u32>, Vec<u32>) =
                    rows.iter().partition(|&&r| self.sample.value(r as usize, col) == v);
                if yes_rows.len() < min || no_rows.len() < min {
                    continue;
                }
                let yes = self.sketch_rows(yes_rows.iter().copied());
                let no = self.sketch_rows(no_rows.iter().copied());
                let gain: u64 = relevant
                    .iter()
                    .map(|q| {
                        let mut g = 0;
                        if !self.matches(q, &yes) {
                            g += yes_rows.len() as u64;
                        }
                        if !self.matches(q, &no) {
                            g += no_rows.len() as u64;
                        }
                        g
                    })
                    .sum();
                consider(gain, ci);
            }
        }
        best
    }
}

/// Greedy construction on `sample` for `workload`, producing at most
/// `max_leaves` leaves.
pub fn build_qdtree(sample: &Dataset, workload: &[Query], max_leaves: usize, config: &QdTreeConfig) -> QdTree {
    let kinds = sample.kinds();
    let queries: Vec<Query> = thin(workload, config.max_queries)
        .iter()
        .map(Query::normalized)
        .filter(|q| q.predicates.iter().all(|p| p.col < kinds.len()))
        .collect();
    if max_leaves <= 1 || queries.is_empty() || sample.num_rows() < 2 {
        return QdTree::single();
    }
    let cuts = thin(&candidate_cuts(&queries, &kinds), config.max_cuts);
    let mut cuts_by_col = vec![Vec::new(); kinds.len()];
    for (i, cut) in cuts.iter().enumerate() {
        cuts_by_col[cut.col].push(i);
    }
    let mut query_cols: Vec<usize> = queries.iter().flat_map(|q| q.columns()).collect();
    query_cols.sort_unstable();
    query_cols.dedup();
    let mut slot = vec![usize::MAX; kinds.len()];
    for (s, &c) in query_cols.iter().enumerate() {
        slot[c] = s;
    }
    let builder = Builder { sample, kinds, queries, cuts, cuts_by_col, query_cols, slot, config: config.clone() };

    struct Open {
        node: usize,
        rows: Vec<u32>,
        split: Option<Split>,
    }
    let all: Vec<u32> = (0..sample.num_rows() as u32).collect();
    let mut nodes = vec![QdNode::Leaf { partition: 0 }];
    let mut open = vec![Open { node: 0, split: builder.best_split(&all), rows: all }];
    while open.len() < max_leaves {
        let mut pick: Option<(usize, Split)> = None;
        for (i, leaf) in open.iter().enumerate() {
            if let Some(s) = leaf.split {
                if pick.is_none_or(|(_, b)| s.gain > b.gain) {
                    pick = Some((i, s));
                }
            }
        }
        let Some((i, split)) = pick else { break };
        let leaf = open.remove(i);
        let cut = builder.cuts[split.cut].clone();
        let (yes_rows, no_rows): (Vec<u32>, Vec<u32>) =
            leaf.rows.iter().partition(|&&r| cut.op.eval(sample.value(r as usize, cut.col)));
        let (yes, no) = (nodes.len(), nodes.len() + 1);
        nodes.push(QdNode::Leaf { partition: 0 });
        nodes.push(QdNode::Leaf { partition: 0 });
        nodes[leaf.node] = QdNode::Inner { cut, yes, no };
        let yes_split = builder.best_split(&yes_rows);
        let no_split = builder.best_split(&no_rows);
        open.insert(i, Open { node: no, rows: no_rows, split: no_split });
        open.insert(i, Open { node: yes, rows: yes_rows, split: yes_split });
    }
    renumber(nodes)
}

/// Assigns partition indices to leaves in preorder.
fn renumber(mut nodes: Vec<QdNode>) -> QdTree {
    let mut next = 0;
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        match &mut nodes[i] {
            QdNode::Inner { yes, no, .. } => {
                stack.push(*no);
                stack.push(*yes);
            }
            QdNode::Leaf { partition } => {
                *partition = next;
                next += 1;
            }
        }
    }
    let tree = QdTree { nodes, leaf_count: next };
    // Canonical preorder node arrangement, identical to a deserialized tree.
    QdTree::try_from(QdTreeRecord::from(tree)).expect("well-formed tree")
}
