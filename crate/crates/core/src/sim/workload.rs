//! Synthetic datasets and template-driven query streams.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::model::{Column, ColumnKind, Dataset, Predicate, Query};

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub rows: usize,
    pub numeric_columns: usize,
    pub categorical_columns: usize,
    pub cardinality: u32,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec { rows: 20_000, numeric_columns: 6, categorical_columns: 2, cardinality: 24 }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.numeric_columns + self.categorical_columns == 0 {
            return Err(Error::Config("dataset needs at least one row and one column".into()));
        }
        if self.categorical_columns > 0 && self.cardinality == 0 {
            return Err(Error::Config("categorical cardinality must be positive".into()));
        }
        Ok(())
    }
}

/// Numeric columns alternate between uniform and right-skewed values in
/// [0, 1]; categorical codes are uniform.
pub fn gen_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = Vec::new();
    for j in 0..spec.numeric_columns {
        let skew = j % 2 == 1;
        let values = (0..spec.rows)
            .map(|_| {
                let u: f64 = rng.gen();
                if skew {
                    u * u
                } else {
                    u
                }
            })
            .collect();
        cols.push(Column::numeric(format!("n{j}"), values));
    }
    for j in 0..spec.categorical_columns {
        let codes = (0..spec.rows).map(|_| rng.gen_range(0..spec.cardinality)).collect();
        cols.push(Column::categorical(format!("c{j}"), codes));
    }
    Dataset::new(cols)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateWorkloadSpec {
    pub num_templates: usize,
    pub total_queries: usize,
    /// Per-query probability of leaving the current template. `None` picks
    /// `1.5 * num_templates / total_queries`, about one and a half visits per
    /// template.
    pub dwell_p: Option<f64>,
}

impl Default for TemplateWorkloadSpec {
    fn default() -> Self {
        TemplateWorkloadSpec { num_templates: 20, total_queries: 30_000, dwell_p: None }
    }
}

impl TemplateWorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.total_queries == 0 {
            return Err(Error::Config("total_queries must be positive".into()));
        }
        if self.num_templates == 0 {
            return Err(Error::Config("num_templates must be positive".into()));
        }
        if let Some(p) = self.dwell_p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("dwell_p must be in (0, 1], got {p}")));
            }
        }
        Ok(())
    }

    pub fn effective_dwell_p(&self) -> f64 {
        self.dwell_p.unwrap_or_else(|| (1.5 * self.num_templates as f64 / self.total_queries as f64).min(1.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Focus {
    Range { col: usize, center: f64, width: f64 },
    Codes { col: usize, codes: Vec<u32> },
}

/// A query shape: one or two columns, each with a focal region that every
/// instance lands near.
#[derive(Clone, Debug, PartialEq)]
pub struct Template {
    pub id: u32,
    focus: Vec<Focus>,
}

impl Template {
    fn random(id: u32, dataset: &Dataset, rng: &mut ChaCha8Rng) -> Template {
        let ncols = dataset.num_columns();
        let arity = if ncols > 1 && rng.gen_bool(0.5) { 2 } else { 1 };
        let cols = rand::seq::index::sample(rng, ncols, arity).into_vec();
        let focus = cols
            .into_iter()
            .map(|col| match dataset.kind(col) {
                ColumnKind::Numeric => {
                    Focus::Range { col, center: rng.gen_range(0.05..0.95), width: rng.gen_range(0.02..0.12) }
                }
                ColumnKind::Categorical => {
                    let card = dataset.cardinality(col).unwrap_or(1).max(1) as usize;
                    let n = card.min(3);
                    let codes = rand::seq::index::sample(rng, card, n).into_iter().map(|c| c as u32).collect();
                    Focus::Codes { col, codes }
                }
            })
            .collect();
        Template { id, focus }
    }

    pub fn columns(&self) -> Vec<usize> {
        self.focus
            .iter()
            .map(|f| match f {
                Focus::Range { col, .. } | Focus::Codes { col, .. } => *col,
            })
            .collect()
    }

    pub fn instantiate(&self, seq: u64, rng: &mut ChaCha8Rng) -> Query {
        let preds = self
            .focus
            .iter()
            .map(|f| match f {
                Focus::Range { col, center, width } => {
                    let w = width * rng.gen_range(0.5..1.5);
                    let mid = center + width * rng.gen_range(-0.5..0.5);
                    Predicate::between(*col, (mid - w / 2.0).max(0.0), (mid + w / 2.0).min(1.0))
                }
                Focus::Codes { col, codes } => {
                    let k = rng.gen_range(1..=codes.len().min(2));
                    let mut pick: Vec<f64> = codes.choose_multiple(rng, k).map(|&c| c as f64).collect();
                    pick.sort_by(f64::total_cmp);
                    if pick.len() == 1 {
                        Predicate::eq(*col, pick[0])
                    } else {
                        Predicate::is_in(*col, pick)
                    }
                }
            })
            .collect();
        Query::new(seq, preds).with_template(self.id)
    }
}

pub fn gen_templates(num_templates: usize, dataset: &Dataset, rng: &mut ChaCha8Rng) -> Vec<Template> {
    (0..num_templates as u32).map(|id| Template::random(id, dataset, rng)).collect()
}

/// Template order: concatenated shuffles of all templates, never repeating
/// the same template back to back.
pub(crate) struct TemplateCycle {
    n: usize,
    queue: Vec<usize>,
    last: Option<usize>,
}

impl TemplateCycle {
    pub(crate) fn new(n: usize) -> Self {
        TemplateCycle { n, queue: Vec::new(), last: None }
    }

    pub(crate) fn next(&mut self, rng: &mut ChaCha8Rng) -> usize {
        if self.queue.is_empty() {
            self.queue = (0..self.n).collect();
            self.queue.shuffle(rng);
            if self.n > 1 && self.queue.last().copied() == self.last {
                let j = rng.gen_range(0..self.n - 1);
                let end = self.n - 1;
                self.queue.swap(j, end);
            }
        }
        let t = self.queue.pop().expect("refilled above");
        self.last = Some(t);
        t
    }
}

/// Segments of geometric length, each drawing every query from one template.
pub fn gen_template_workload(spec: &TemplateWorkloadSpec, dataset: &Dataset, seed: u64) -> Result<Vec<Query>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let templates = gen_templates(spec.num_templates, dataset, &mut rng);
    let p = spec.effective_dwell_p();
    let dwell = Geometric::new(p).map_err(|e| Error::Config(format!("dwell_p: {e}")))?;
    let mut order = TemplateCycle::new(templates.len());
    let mut out = Vec::with_capacity(spec.total_queries);
    while out.len() < spec.total_queries {
        let t = &templates[order.next(&mut rng)];
        let len = 1 + dwell.sample(&mut rng) as usize;
        for _ in 0..len.min(spec.total_queries - out.len()) {
            let seq = out.len() as u64;
            out.push(t.instantiate(seq, &mut rng));
        }
    }
    Ok(out)
}

/// Number of positions where the template label changes.
pub fn template_changes(workload: &[Query]) -> usize {
    workload.windows(2).filter(|w| w[0].template_id != w[1].template_id).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn small() -> Dataset {
        gen_dataset(&DatasetSpec { rows: 500, ..Default::default() }, 1).unwrap()
    }

    #[test]
    fn dataset_shape() {
        let ds = small();
        assert_eq!((ds.num_rows(), ds.num_columns()), (500, 8));
        assert_eq!(ds.kind(6), ColumnKind::Categorical);
        assert!((0..500).all(|r| (0.0..1.0).contains(&ds.value(r, 1))));
    }

    #[test]
    fn one_template_one_label() {
        let spec = TemplateWorkloadSpec { num_templates: 1, total_queries: 300, dwell_p: Some(0.1) };
        let w = gen_template_workload(&spec, &small(), 3).unwrap();
        assert_eq!(w.len(), 300);
        assert!(w.iter().all(|q| q.template_id == Some(0)));
    }

    #[test]
    fn certain_exit_changes_every_query() {
        let spec = TemplateWorkloadSpec { num_templates: 5, total_queries: 200, dwell_p: Some(1.0) };
        let w = gen_template_workload(&spec, &small(), 3).unwrap();
        assert_eq!(template_changes(&w), 199);
    }

    #[test]
    fn paper_sized_stream_visits_every_template() {
        let ds = small();
        let w = gen_template_workload(&TemplateWorkloadSpec::default(), &ds, 11).unwrap();
        assert_eq!(w.len(), 30_000);
        let seen: BTreeSet<u32> = w.iter().filter_map(|q| q.template_id).collect();
        assert_eq!(seen.len(), 20);
        assert!(w.iter().enumerate().all(|(i, q)| q.seq == i as u64));
        let kinds = ds.kinds();
        assert!(w.iter().all(|q| q.validate(&kinds).is_ok()));
    }

    #[test]
    fn segment_lengths_follow_the_seeded_dwell_draws() {
        let ds = small();
        let spec = TemplateWorkloadSpec { num_templates: 4, total_queries: 2000, dwell_p: Some(0.02) };
        let w = gen_template_workload(&spec, &ds, 5).unwrap();
        // replay the generator's draws independently
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let templates = gen_templates(4, &ds, &mut rng);
        let mut cycle = TemplateCycle::new(4);
        let geo = Geometric::new(0.02).unwrap();
        let mut expected = Vec::new();
        let mut total = 0;
        while total < 2000 {
            let t = cycle.next(&mut rng);
            let len = (1 + geo.sample(&mut rng) as usize).min(2000 - total);
            for k in 0..len {
                templates[t].instantiate((total + k) as u64, &mut rng);
            }
            expected.push((t as u32, len));
            total += len;
        }
        let mut got: Vec<(u32, usize)> = Vec::new();
        for q in &w {
            let t = q.template_id.unwrap();
            match got.last_mut() {
                Some((last, n)) if *last == t => *n += 1,
                _ => got.push((t, 1)),
            }
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn deterministic_under_seed() {
        let ds = small();
        let spec = TemplateWorkloadSpec { num_templates: 3, total_queries: 500, dwell_p: None };
        assert_eq!(gen_template_workload(&spec, &ds, 9).unwrap(), gen_template_workload(&spec, &ds, 9).unwrap());
    }
}
