//! One fact table joined to one dimension table, and the rewrite that pushes
//! dimension filters onto the fact table's foreign key.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use super::workload::TemplateCycle;
use crate::error::{Error, Result};
use crate::layout::{ZOrder, DEFAULT_BITS_PER_COLUMN};
use crate::model::{partition_matches, Column, ColumnStats, Dataset, FitSource, Layout, LayoutId, Predicate, Query, Routing};

/// Join columns: the dimension's key and the fact table's foreign key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JoinKey {
    pub dim_col: usize,
    pub fact_col: usize,
}

/// Append `BETWEEN(lo, hi)` on the fact foreign key, where `[lo, hi]` spans
/// the join keys of every dimension partition that may satisfy
/// `dim_predicates`. When none can, the appended predicate matches nothing.
pub fn dip_transform(fact_query: &Query, dim_layout: &Layout, dim_predicates: &[Predicate], join: JoinKey) -> Result<Query> {
    let probe = Query::new(0, dim_predicates.to_vec());
    let mut envelope: Option<(f64, f64)> = None;
    for meta in dim_layout.partitions.iter().filter(|m| partition_matches(m, &probe)) {
        match meta.columns.get(join.dim_col) {
            Some(ColumnStats::Numeric { min, max }) => {
                envelope = Some(envelope.map_or((*min, *max), |(lo, hi)| (lo.min(*min), hi.max(*max))));
            }
            _ => return Err(Error::InvalidParameter(format!("join column {} has no numeric range", join.dim_col))),
        }
    }
    let mut q = fact_query.clone();
    q.predicates.push(match envelope {
        Some((lo, hi)) => Predicate::between(join.fact_col, lo, hi),
        None => Predicate::never(join.fact_col),
    });
    Ok(q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarSchemaSpec {
    pub fact_rows: usize,
    pub dim_rows: usize,
    pub dim_partitions: usize,
    pub num_templates: usize,
    pub total_queries: usize,
    pub dwell_p: f64,
}

impl Default for StarSchemaSpec {
    fn default() -> Self {
        StarSchemaSpec {
            fact_rows: 20_000,
            dim_rows: 2_000,
            dim_partitions: 32,
            num_templates: 8,
            total_queries: 4_000,
            dwell_p: 0.004,
        }
    }
}

/// Column positions in the generated tables.
pub const DIM_KEY: usize = 0;
pub const DIM_SCORE: usize = 1;
pub const DIM_REGION: usize = 2;
pub const DIM_NOISE: usize = 3;
pub const FACT_FK: usize = 0;
pub const FACT_M0: usize = 1;
pub const FACT_M1: usize = 2;
pub const REGIONS: u32 = 8;

#[derive(Clone, Debug)]
pub struct StarQuery {
    pub fact: Query,
    pub dim: Vec<Predicate>,
}

#[derive(Clone, Debug)]
pub struct StarInstance {
    pub dim: Dataset,
    pub fact: Dataset,
    pub dim_layout: Layout,
    pub queries: Vec<StarQuery>,
}

impl StarInstance {
    pub fn join(&self) -> JoinKey {
        JoinKey { dim_col: DIM_KEY, fact_col: FACT_FK }
    }

    /// Fact queries with their local predicates only.
    pub fn plain_workload(&self) -> Vec<Query> {
        self.queries.iter().map(|q| q.fact.clone()).collect()
    }

    pub fn augmented_workload(&self) -> Result<Vec<Query>> {
        self.queries.iter().map(|q| dip_transform(&q.fact, &self.dim_layout, &q.dim, self.join())).collect()
    }
}

#[derive(Clone, Debug)]
enum DimFilter {
    Score { center: f64, width: f64 },
    Region(u32),
    Noise { center: f64, width: f64 },
}

/// Dimension attributes: a score that tracks the key, a region that buckets
/// the key, and an unrelated noise column. The dimension layout range
/// partitions on the key.
pub fn gen_star_schema(spec: &StarSchemaSpec, seed: u64) -> Result<StarInstance> {
    if spec.fact_rows == 0 || spec.dim_rows == 0 || spec.dim_partitions == 0 || spec.num_templates == 0 {
        return Err(Error::Config("star schema sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.dim_rows;
    let keys: Vec<f64> = (0..d).map(|k| k as f64).collect();
    let score = (0..d).map(|k| (k as f64 / d as f64 + rng.gen_range(-0.03..0.03)).clamp(0.0, 1.0)).collect();
    let region = (0..d).map(|k| (k as u64 * REGIONS as u64 / d as u64) as u32).collect();
    let noise = (0..d).map(|_| rng.gen()).collect();
    let dim = Dataset::new(vec![
        Column::numeric("key", keys),
        Column::numeric("score", score),
        Column::categorical("region", region),
        Column::numeric("noise", noise),
    ])?;
    let fact = Dataset::new(vec![
        Column::numeric("fk", (0..spec.fact_rows).map(|_| rng.gen_range(0..d) as f64).collect()),
        Column::numeric("m0", (0..spec.fact_rows).map(|_| rng.gen()).collect()),
        Column::numeric("m1", (0..spec.fact_rows).map(|_| rng.gen()).collect()),
    ])?;
    let z = ZOrder::build(&dim, vec![DIM_KEY], DEFAULT_BITS_PER_COLUMN, spec.dim_partitions);
    let dim_layout = Layout::materialize(LayoutId(0), Routing::ZOrder(z), &dim, FitSource::Full, 0);

    let templates: Vec<(DimFilter, Option<(usize, f64)>)> = (0..spec.num_templates)
        .map(|t| {
            let filter = match t % 3 {
                0 => DimFilter::Score { center: rng.gen_range(0.05..0.95), width: rng.gen_range(0.03..0.1) },
                1 => DimFilter::Region(rng.gen_range(0..REGIONS)),
                _ => DimFilter::Noise { center: rng.gen_range(0.1..0.9), width: rng.gen_range(0.05..0.2) },
            };
            let local = rng.gen_bool(0.5).then(|| (if rng.gen_bool(0.5) { FACT_M0 } else { FACT_M1 }, rng.gen_range(0.3..0.6)));
            (filter, local)
        })
        .collect();
    let dwell = Geometric::new(spec.dwell_p).map_err(|e| Error::Config(format!("dwell_p: {e}")))?;
    let mut cycle = TemplateCycle::new(templates.len());
    let mut queries = Vec::with_capacity(spec.total_queries);
    while queries.len() < spec.total_queries {
        let t = cycle.next(&mut rng);
        let len = 1 + dwell.sample(&mut rng) as usize;
        let (filter, local) = &templates[t];
        for _ in 0..len.min(spec.total_queries - queries.len()) {
            let seq = queries.len() as u64;
            let jitter = |rng: &mut ChaCha8Rng, c: f64, w: f64| {
                let mid = c + w * rng.gen_range(-0.5..0.5);
                ((mid - w / 2.0).max(0.0), (mid + w / 2.0).min(1.0))
            };
            let dim_preds = match *filter {
                DimFilter::Score { center, width } => {
                    let (lo, hi) = jitter(&mut rng, center, width);
                    vec![Predicate::between(DIM_SCORE, lo, hi)]
                }
                DimFilter::Region(r) => vec![Predicate::eq(DIM_REGION, r as f64)],
                DimFilter::Noise { center, width } => {
                    let (lo, hi) = jitter(&mut rng, center, width);
                    vec![Predicate::between(DIM_NOISE, lo, hi)]
                }
            };
            let fact_preds = match *local {
                Some((col, w)) => {
                    let lo = rng.gen_range(0.0..1.0 - w);
                    vec![Predicate::between(col, lo, lo + w)]
                }
                None => Vec::new(),
            };
            queries.push(StarQuery { fact: Query::new(seq, fact_preds).with_template(t as u32), dim: dim_preds });
        }
    }
    Ok(StarInstance { dim, fact, dim_layout, queries })
}
