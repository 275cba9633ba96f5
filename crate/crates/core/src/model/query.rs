use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::{ColumnKind, Dataset};
use crate::error::{Error, Result};

/// Comparison operator and its operands. `Between` is inclusive on both ends.
/// An empty `In` set matches nothing.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Eq(f64),
    Lt(f64),
    Le(f64),
    Gt(f64),
    Ge(f64),
    Between(f64, f64),
    In(Vec<f64>),
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Eq(_) => "EQ",
            Op::Lt(_) => "LT",
            Op::Le(_) => "LE",
            Op::Gt(_) => "GT",
            Op::Ge(_) => "GE",
            Op::Between(..) => "BETWEEN",
            Op::In(_) => "IN",
        }
    }

    pub fn operands(&self) -> Vec<f64> {
        match self {
            Op::Eq(v) | Op::Lt(v) | Op::Le(v) | Op::Gt(v) | Op::Ge(v) => vec![*v],
            Op::Between(lo, hi) => vec![*lo, *hi],
            Op::In(set) => set.clone(),
        }
    }

    #[inline]
    pub fn eval(&self, v: f64) -> bool {
        match self {
            Op::Eq(x) => v == *x,
            Op::Lt(x) => v < *x,
            Op::Le(x) => v <= *x,
            Op::Gt(x) => v > *x,
            Op::Ge(x) => v >= *x,
            Op::Between(lo, hi) => *lo <= v && v <= *hi,
            Op::In(set) => set.contains(&v),
        }
    }

    /// True if some value in the closed interval `[min, max]` satisfies the op.
    #[inline]
    pub fn overlaps(&self, min: f64, max: f64) -> bool {
        match self {
            Op::Eq(x) => min <= *x && *x <= max,
            Op::Lt(x) => min < *x,
            Op::Le(x) => min <= *x,
            Op::Gt(x) => max > *x,
            Op::Ge(x) => max >= *x,
            Op::Between(lo, hi) => max >= *lo && min <= *hi,
            Op::In(set) => set.iter().any(|x| min <= *x && *x <= max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PredicateRecord", into = "PredicateRecord")]
pub struct Predicate {
    pub col: usize,
    pub op: Op,
}

#[derive(Serialize, Deserialize)]
struct PredicateRecord {
    col: usize,
    op: String,
    operands: Vec<f64>,
}

impl From<Predicate> for PredicateRecord {
    fn from(p: Predicate) -> Self {
        PredicateRecord { col: p.col, op: p.op.name().to_string(), operands: p.op.operands() }
    }
}

impl TryFrom<PredicateRecord> for Predicate {
    type Error = Error;

    fn try_from(r: PredicateRecord) -> Result<Self> {
        let single = |ops: &[f64]| match ops {
            [v] => Ok(*v),
            _ => Err(Error::InvalidQuery(format!("{} takes exactly one operand", r.op))),
        };
        let op = match r.op.as_str() {
            "EQ" => Op::Eq(single(&r.operands)?),
            "LT" => Op::Lt(single(&r.operands)?),
            "LE" => Op::Le(single(&r.operands)?),
            "GT" => Op::Gt(single(&r.operands)?),
            "GE" => Op::Ge(single(&r.operands)?),
            "BETWEEN" => match r.operands.as_slice() {
                [lo, hi] => Op::Between(*lo, *hi),
                _ => return Err(Error::InvalidQuery("BETWEEN takes two operands".into())),
            },
            "IN" => Op::In(r.operands),
            other => return Err(Error::InvalidQuery(format!("unknown operator '{other}'"))),
        };
        let pred = Predicate { col: r.col, op };
        pred.check_operands()?;
        Ok(pred)
    }
}

impl Predicate {
    pub fn new(col: usize, op: Op) -> Self {
        Predicate { col, op }
    }

    pub fn eq(col: usize, v: f64) -> Self {
        Predicate::new(col, Op::Eq(v))
    }

    pub fn between(col: usize, lo: f64, hi: f64) -> Self {
        Predicate::new(col, Op::Between(lo, hi))
    }

    pub fn is_in(col: usize, set: Vec<f64>) -> Self {
        Predicate::new(col, Op::In(set))
    }

    /// A predicate no value satisfies.
    pub fn never(col: usize) -> Self {
        Predicate::new(col, Op::In(Vec::new()))
    }

    fn check_operands(&self) -> Result<()> {
        let ops = self.op.operands();
        if ops.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidQuery(format!("NaN operand on column {}", self.col)));
        }
        if let Op::Between(lo, hi) = self.op {
            if lo > hi {
                return Err(Error::InvalidQuery(format!(
                    "BETWEEN on column {} has lo {lo} > hi {hi}",
                    self.col
                )));
            }
        }
        Ok(())
    }

    /// Checks column existence, operand sanity and that operand kinds match
    /// the column kind (categorical operands must be non-negative integers).
    pub fn validate(&self, kinds: &[ColumnKind]) -> Result<()> {
        let Some(kind) = kinds.get(self.col) else {
            return Err(Error::InvalidQuery(format!(
                "column {} does not exist ({} columns)",
                self.col,
                kinds.len()
            )));
        };
        self.check_operands()?;
        if *kind == ColumnKind::Categorical {
            if let Some(bad) = self
                .op
                .operands()
                .into_iter()
                .find(|v| *v < 0.0 || v.fract() != 0.0 || *v > f64::from(u32::MAX))
            {
                return Err(Error::InvalidQuery(format!(
                    "operand {bad} is not a category code for column {}",
                    self.col
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval_row(&self, dataset: &Dataset, row: usize) -> bool {
        self.op.eval(dataset.value(row, self.col))
    }
}

/// Conjunction of predicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub seq: u64,
    #[serde(default)]
    pub template_id: Option<u32>,
    pub predicates: Vec<Predicate>,
}

impl Query {
    pub fn new(seq: u64, predicates: Vec<Predicate>) -> Self {
        Query { seq, template_id: None, predicates }
    }

    pub fn with_template(mut self, template_id: u32) -> Self {
        self.template_id = Some(template_id);
        self
    }

    pub fn validate(&self, kinds: &[ColumnKind]) -> Result<()> {
        self.predicates.iter().try_for_each(|p| p.validate(kinds))
    }

    #[inline]
    pub fn eval_row(&self, dataset: &Dataset, row: usize) -> bool {
        self.predicates.iter().all(|p| p.eval_row(dataset, row))
    }

    /// Intersects multiple `BETWEEN` predicates on the same column into one.
    /// Disjoint ranges collapse into a predicate nothing satisfies.
    pub fn normalized(&self) -> Query {
        let mut ranges: BTreeMap<usize, Option<(f64, f64)>> = BTreeMap::new();
        let mut rest = Vec::with_capacity(self.predicates.len());
        for p in &self.predicates {
            match p.op {
                Op::Between(lo, hi) => {
                    let entry = ranges.entry(p.col).or_insert(Some((lo, hi)));
                    *entry = entry.and_then(|(a, b)| {
                        let (lo, hi) = (a.max(lo), b.min(hi));
                        (lo <= hi).then_some((lo, hi))
                    });
                }
                _ => rest.push(p.clone()),
            }
        }
        let mut predicates: Vec<Predicate> = ranges
            .into_iter()
            .map(|(col, r)| match r {
                Some((lo, hi)) => Predicate::between(col, lo, hi),
                None => Predicate::never(col),
            })
            .collect();
        predicates.extend(rest);
        Query { seq: self.seq, template_id: self.template_id, predicates }
    }

    pub fn columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.predicates.iter().map(|p| p.col)
    }
}
