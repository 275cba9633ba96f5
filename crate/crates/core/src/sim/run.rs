//! The event loop: serve each query, let the policy decide, feed the manager.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use super::workload::{gen_dataset, gen_template_workload};
use crate::engine::{CostMap, Decision, Engine, EngineConfig, ParallelConfig, ParallelEngine};
use crate::error::{Error, Result};
use crate::layout::{best_layout_for_template, PartitionBudget};
use crate::manager::{LayoutManager, ManagerConfig, StateEvent};
use crate::model::{io, query_cost, CostLedger, Dataset, EventKind, FitSource, Layout, LayoutId, Query, Routing};
use crate::policy::{greedy_policy_step, static_policy, PolicyKind, RegretLedger};

/// Headline numbers of one run; one CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub policy: PolicyKind,
    pub seed: u64,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub delay: usize,
    pub q: usize,
    pub source: String,
    pub queries: usize,
    pub query_cost: f64,
    pub reorg_cost: f64,
    pub total_cost: f64,
    pub switches: u64,
    pub phases: u64,
    pub final_states: usize,
    pub max_states: usize,
    pub mean_states: f64,
}

impl Summary {
    pub const HEADER: &'static str = "policy,seed,alpha,gamma,epsilon,delay,q,source,queries,query_cost,reorg_cost,total_cost,switches,phases,final_states,max_states,mean_states";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.policy,
            self.seed,
            self.alpha,
            self.gamma,
            self.epsilon,
            self.delay,
            self.q,
            self.source,
            self.queries,
            self.query_cost,
            self.reorg_cost,
            self.total_cost,
            self.switches,
            self.phases,
            self.final_states,
            self.max_states,
            self.mean_states
        )
    }

    pub fn from_csv_row(line: &str) -> Result<Summary> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 17 {
            return Err(Error::InvalidParameter(format!("summary row has {} fields, expected 17", f.len())));
        }
        fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::InvalidParameter(format!("bad summary field '{s}'")))
        }
        Ok(Summary {
            policy: f[0].parse()?,
            seed: num(f[1])?,
            alpha: num(f[2])?,
            gamma: num(f[3])?,
            epsilon: num(f[4])?,
            delay: num(f[5])?,
            q: num(f[6])?,
            source: f[7].to_string(),
            queries: num(f[8])?,
            query_cost: num(f[9])?,
            reorg_cost: num(f[10])?,
            total_cost: num(f[11])?,
            switches: num(f[12])?,
            phases: num(f[13])?,
            final_states: num(f[14])?,
            max_states: num(f[15])?,
            mean_states: num(f[16])?,
        })
    }
}

pub fn summaries_to_csv(rows: &[Summary]) -> String {
    let mut s = String::from(Summary::HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv_row());
        s.push('\n');
    }
    s
}

pub fn summaries_from_csv(text: &str) -> Result<Vec<Summary>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(Summary::HEADER) {
        return Err(Error::InvalidParameter("summary header mismatch".into()));
    }
    lines.filter(|l| !l.trim().is_empty()).map(Summary::from_csv_row).collect()
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub ledger: CostLedger,
    pub summary: Summary,
    /// `(seq, size)` whenever the state space changes size.
    pub state_space: Vec<(u64, usize)>,
}

/// Independent stream per component, derived from the run seed.
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TAG_DATA: u64 = 1;
const TAG_WORKLOAD: u64 = 2;
const TAG_SAMPLE: u64 = 3;
const TAG_ENGINE: u64 = 4;
const TAG_MANAGER: u64 = 5;

/// Dataset and workload from the configured files, or generated from the
/// specs and the run seed.
pub fn load_inputs(config: &RunConfig) -> Result<(Arc<Dataset>, Vec<Query>)> {
    let dataset = match &config.dataset {
        Some(p) => io::load_dataset(p)?,
        None => gen_dataset(&config.dataset_spec, sub_seed(config.seed, TAG_DATA))?,
    };
    let workload = match &config.workload {
        Some(p) => io::load_queries(p)?,
        None => gen_template_workload(&config.workload_spec, &dataset, sub_seed(config.seed, TAG_WORKLOAD))?,
    };
    let kinds = dataset.kinds();
    for q in &workload {
        q.validate(&kinds)?;
    }
    Ok((Arc::new(dataset), workload))
}

/// Serving state, pending switch and the ledger shared by every policy.
struct Books {
    ledger: CostLedger,
    layouts: BTreeMap<LayoutId, Arc<Layout>>,
    serving: LayoutId,
    pending: Option<(LayoutId, usize)>,
    delay: usize,
    record_costs: bool,
    sizes: Vec<(u64, usize)>,
    size_sum: f64,
    max_size: usize,
}

impl Books {
    fn new(alpha: f64, config: &RunConfig, layouts: &[Arc<Layout>], serving: LayoutId) -> Books {
        Books {
            ledger: CostLedger::new(alpha),
            layouts: layouts.iter().map(|l| (l.id, l.clone())).collect(),
            serving,
            pending: None,
            delay: config.delay,
            record_costs: config.record_costs,
            sizes: Vec::new(),
            size_sum: 0.0,
            max_size: 0,
        }
    }

    /// Finish the reorganization once its delay has elapsed.
    fn begin_query(&mut self) {
        if let Some((target, left)) = self.pending {
            if left == 0 {
                self.serving = target;
                self.pending = None;
            } else {
                self.pending = Some((target, left - 1));
            }
        }
    }

    fn layout(&self, id: LayoutId) -> &Layout {
        &self.layouts[&id]
    }

    fn costs(&self, ids: impl IntoIterator<Item = LayoutId>, q: &Query) -> CostMap {
        ids.into_iter().map(|id| (id, query_cost(self.layout(id), q))).collect()
    }

    /// Charge the query on the serving layout. `costs` must cover it when
    /// given; the serving layout is added to what gets recorded.
    fn serve(&mut self, q: &Query, phase: u64, digest: Option<String>, costs: Option<&CostMap>) -> f64 {
        let cost = match costs.and_then(|c| c.get(&self.serving)) {
            Some(&c) => c,
            None => query_cost(self.layout(self.serving), q),
        };
        let recorded = self.record_costs.then(|| {
            let mut m = costs.cloned().unwrap_or_default();
            m.insert(self.serving, cost);
            m
        });
        self.ledger.record_query(q.seq, self.serving, cost, phase, digest, recorded);
        cost
    }

    /// Book the movement charge now; the layout serves after the delay.
    fn switch(&mut self, seq: u64, target: LayoutId, phase: u64, digest: Option<String>) {
        self.ledger.record_switch(seq, target, phase, digest);
        self.pending = Some((target, self.delay));
    }

    /// A layout loaded alongside the serving one.
    fn load(&mut self, seq: u64, id: LayoutId, phase: u64) {
        self.ledger.record_switch(seq, id, phase, None);
    }

    /// Switch immediately, ignoring the delay.
    fn switch_now(&mut self, seq: u64, target: LayoutId, phase: u64) {
        self.ledger.record_switch(seq, target, phase, None);
        self.serving = target;
        self.pending = None;
    }

    fn protected(&self, logical: impl IntoIterator<Item = LayoutId>) -> BTreeSet<LayoutId> {
        let mut p: BTreeSet<LayoutId> = logical.into_iter().collect();
        p.insert(self.serving);
        if let Some((t, _)) = self.pending {
            p.insert(t);
        }
        p
    }

    fn track_size(&mut self, seq: u64, size: usize) {
        if self.sizes.last().is_none_or(|&(_, s)| s != size) {
            self.sizes.push((seq, size));
        }
        self.size_sum += size as f64;
        self.max_size = self.max_size.max(size);
    }

    fn finish(self, config: &RunConfig, queries: usize, phases: u64) -> RunOutput {
        let final_states = self.sizes.last().map_or(0, |&(_, s)| s);
        let summary = Summary {
            policy: config.policy,
            seed: config.seed,
            alpha: config.alpha,
            gamma: config.gamma,
            epsilon: config.epsilon,
            delay: config.delay,
            q: config.q,
            source: config.candidate_source.as_str().to_string(),
            queries,
            query_cost: self.ledger.query_cost(),
            reorg_cost: self.ledger.reorg_cost(),
            total_cost: self.ledger.total_cost(),
            switches: self.ledger.switches(),
            phases,
            final_states,
            max_states: self.max_size,
            mean_states: if queries == 0 { 0.0 } else { self.size_sum / queries as f64 },
        };
        RunOutput { ledger: self.ledger, summary, state_space: self.sizes }
    }
}

struct Setup {
    dataset: Arc<Dataset>,
    sample: Arc<Dataset>,
    budget: PartitionBudget,
}

impl Setup {
    fn new(config: &RunConfig, dataset: Arc<Dataset>) -> Result<Setup> {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_SAMPLE));
        let sample = Arc::new(dataset.sample(config.sample_rows, &mut rng));
        Ok(Setup { dataset, sample, budget: PartitionBudget::new(config.budget)? })
    }

    fn full(&self, id: LayoutId, routing: Routing, created_at: u64) -> Arc<Layout> {
        Arc::new(Layout::materialize(id, routing, &self.dataset, FitSource::Full, created_at))
    }

    fn default_layout(&self) -> Arc<Layout> {
        self.full(LayoutId(0), Routing::Single, 0)
    }

    fn manager(&self, config: &RunConfig, initial: Vec<Arc<Layout>>, next_id: u64) -> Result<LayoutManager> {
        let mut mc = ManagerConfig::new(self.budget, sub_seed(config.seed, TAG_MANAGER));
        mc.window_w = config.window_w;
        mc.reservoir_r = config.reservoir_r;
        mc.lambda = config.lambda;
        mc.epsilon = config.epsilon;
        mc.regen_period = config.regen_period;
        mc.candidate_kind = config.candidate_kind;
        mc.candidate_source = config.candidate_source;
        mc.prune_period = config.prune_period;
        LayoutManager::new(mc, self.dataset.clone(), self.sample.clone(), initial, next_id)
    }

    /// One layout per template label, id = label.
    fn template_layouts(&self, workload: &[Query]) -> Result<Vec<Arc<Layout>>> {
        let mut groups: BTreeMap<u32, Vec<Query>> = BTreeMap::new();
        for q in workload {
            let t = q.template_id.ok_or_else(|| Error::Config(format!("query {} has no template label", q.seq)))?;
            groups.entry(t).or_default().push(q.clone());
        }
        groups
            .iter()
            .map(|(&t, qs)| {
                let l = best_layout_for_template(&self.sample, qs, self.budget, LayoutId(t as u64))?;
                Ok(self.full(l.id, l.routing, 0))
            })
            .collect()
    }
}

/// Run one policy over `workload` and return its ledger and summary.
pub fn run_simulation(config: &RunConfig, dataset: Arc<Dataset>, workload: &[Query]) -> Result<RunOutput> {
    config.validate()?;
    let setup = Setup::new(config, dataset)?;
    match config.policy {
        PolicyKind::Static => run_static(config, &setup, workload),
        PolicyKind::Dumts => run_dumts(config, &setup, workload),
        PolicyKind::Greedy => run_greedy(config, &setup, workload),
        PolicyKind::Regret => run_regret(config, &setup, workload),
        PolicyKind::MtsOptimal => run_mts_optimal(config, &setup, workload),
        PolicyKind::OfflineOptimal => run_offline_optimal(config, &setup, workload),
        PolicyKind::ParallelQ => run_parallel(config, &setup, workload),
    }
}

fn run_static(config: &RunConfig, setup: &Setup, workload: &[Query]) -> Result<RunOutput> {
    let fitted = static_policy(workload, &setup.sample, setup.budget, LayoutId(0));
    let layout = setup.full(LayoutId(0), fitted.routing, 0);
    let mut books = Books::new(config.alpha, config, &[layout], LayoutId(0));
    for q in workload {
        let costs = books.record_costs.then(|| books.costs([LayoutId(0)], q));
        books.serve(q, 0, None, costs.as_ref());
        books.track_size(q.seq, 1);
    }
    Ok(books.finish(config, workload.len(), 0))
}

fn engine_config(config: &RunConfig) -> EngineConfig {
    EngineConfig::new(config.alpha, sub_seed(config.seed, TAG_ENGINE))
        .with_gamma(config.gamma)
        .with_stay_on_reset(config.stay_on_reset)
}

fn apply_decision(books: &mut Books, engine: &Engine, seq: u64, decision: Decision) {
    if decision.is_phase_reset() {
        books.ledger.record_marker(seq, EventKind::PhaseReset, engine.current(), engine.phase());
    }
    if let Some(target) = decision.target() {
        books.switch(seq, target, engine.phase(), Some(engine.counters_digest()));
    }
}

fn run_dumts(config: &RunConfig, setup: &Setup, workload: &[Query]) -> Result<RunOutput> {
    let default = setup.default_layout();
    let mut engine = Engine::new(engine_config(config), [default.id], Some(default.id))?;
    let mut manager = setup.manager(config, vec![default.clone()], 1)?;
    let mut books = Books::new(config.alpha, config, &[default], LayoutId(0));
    for q in workload {
        books.begin_query();
        let costs = books.costs(engine.states().iter().copied(), q);
        books.serve(q, engine.phase(), Some(engine.counters_digest()), Some(&costs));
        let d = engine.on_query(&costs)?;
        apply_decision(&mut books, &engine, q.seq, d);

        let protected = books.protected([engine.current()]);
        for event in manager.step(q, &protected)?.events {
            match event {
                StateEvent::Add(l) => {
                    engine.add_state(l.id)?;
                    books.ledger.record_marker(q.seq, EventKind::Add, l.id, engine.phase());
                    books.layouts.insert(l.id, l);
                }
                StateEvent::Remove(id) => {
                    let d = engine.remove_state(id)?;
                    books.ledger.record_marker(q.seq, EventKind::Remove, id, engine.phase());
                    apply_decision(&mut books, &engine, q.seq, d);
                    books.layouts.remove(&id);
                }
            }
        }
        books.track_size(q.seq, engine.states().len());
    }
    let phases = engine.phase() + 1;
    Ok(books.finish(config, workload.len(), phases))
}

/// Costs of the manager's state space plus whatever is serving.
fn space_costs(books: &Books, manager: &LayoutManager, extra: &[LayoutId], q: &Query) -> Option<CostMap> {
    books.record_costs.then(|| {
        let mut ids: BTreeSet<LayoutId> = manager.state_space().iter().map(|l| l.id).collect();
        ids.extend(extra);
        books.costs(ids, q)
    })
}

fn sync_space(books: &mut Books, manager: &LayoutManager, keep: &[LayoutId], seq: u64, events: Vec<StateEvent>) {
    for event in events {
        match event {
            StateEvent::Add(l) => {
                books.ledger.record_marker(seq, EventKind::Add, l.id, 0);
                books.layouts.insert(l.id, l);
            }
            StateEvent::Remove(id) => {
                books.ledger.record_marker(seq, EventKind::Remove, id, 0);
                if !keep.contains(&id) && id != books.serving && books.pending.is_none_or(|(t, _)| t != id) {
                    books.layouts.remove(&id);
                }
            }
        }
    }
    books.track_size(seq, manager.state_space().len());
}

fn run_greedy(config: &RunConfig, setup: &Setup, workload: &[Query]) -> Result<RunOutput> {
    let default = setup.default_layout();
    let mut manager = setup.manager(config, vec![default.clone()], 1)?;
    let mut books = Books::new(config.alpha, config, &[default], LayoutId(0));
    let mut current = LayoutId(0);
    for q in workload {
        books.begin_query();
        let costs = space_costs(&books, &manager, &[current, books.serving], q);
        books.serve(q, 0, None, costs.as_ref());
        let out = manager.step(q, &books.protected([current]))?;
        let window = manager.window().to_vec();
        for c in &out.candidates {
            books.layouts.insert(c.id, c.clone());
            if let Decision::SwitchTo(t) = greedy_policy_step(books.layout(current), c, &window) {
                current = t;
                books.switch(q.seq, t, 0, None);
            }
        }
        sync_space(&mut books, &manager, &[current], q.seq, out.events);
    }
    Ok(books.finish(config, workload.len(), 0))
}

fn run_regret(config: &RunConfig, setup: &Setup, workload: &[Query]) -> Result<RunOutput> {
    let default = setup.default_layout();
    let mut manager = setup.manager(config, vec![default.clone()], 1)?;
    let mut books = Books::new(config.alpha, config, &[default], LayoutId(0));
    let mut current = LayoutId(0);
    let mut regret = RegretLedger::new();
    for q in workload {
        books.begin_query();
        let costs = space_costs(&books, &manager, &[current, books.serving], q);
        books.serve(q, 0, None, costs.as_ref());
        let cur = books.layouts[&current].clone();
        if let Decision::SwitchTo(t) = regret.step(&cur, manager.state_space(), q, config.alpha) {
            current = t;
            books.switch(q.seq, t, 0, None);
        }
        let out = manager.step(q, &books.protected([current]))?;
        sync_space(&mut books, &manager, &[current], q.seq, out.events);
    }
    Ok(books.finish(config, workload.len(), 0))
}

fn run_mts_optimal(config: &RunConfig, setup: &Setup, workload: &[Query]) -> Result<RunOutput> {
    let layouts = setup.template_layouts(workload)?;
    if layouts.is_empty() {
        return Ok(Books::new(config.alpha, config, &[], LayoutId(0)).finish(config, 0, 0));
    }
    let ids: Vec<LayoutId> = layouts.iter().map(|l| l.id).collect();
    let mut engine = Engine::new(engine_config(config), ids.iter().copied(), None)?;
    let mut books = Books::new(config.alpha, config, &layouts, engine.current());
    for q in workload {
        books.begin_query();
        let costs = books.costs(ids.iter().copied(), q);
        books.serve(q, engine.phase(), Some(engine.counters_digest()), Some(&costs));
        let d = engine.on_query(&costs)?;
        apply_decision(&mut books, &engine, q.seq, d);
        books.track_size(q.seq, ids.len());
    }
    let phases = engine.phase() + 1;
    Ok(books.finish(config, workload.len(), phases))
}

/// Knows every label in advance, so it moves right at each template change
/// with no delay.
fn run_offline_optimal(config: &RunConfig, setup: &Setup, workload: &[Query]) -> Result<RunOutput> {
    let layouts = setup.template_layouts(workload)?;
    let first = workload.first().and_then(|q| q.template_id).map_or(LayoutId(0), |t| LayoutId(t as u64));
    let mut books = Books::new(config.alpha, config, &layouts, first);
    let ids: Vec<LayoutId> = layouts.iter().map(|l| l.id).collect();
    for q in workload {
        let want = LayoutId(q.template_id.expect("labels checked when fitting") as u64);
        if want != books.serving {
            books.switch_now(q.seq, want, 0);
        }
        let costs = books.record_costs.then(|| books.costs(ids.iter().copied(), q));
        books.serve(q, 0, None, costs.as_ref());
        books.track_size(q.seq, ids.len());
    }
    Ok(books.finish(config, workload.len(), 0))
}

/// Holds up to `q` layouts at once and serves each query on the cheapest.
/// Until the manager has produced `q` layouts every admitted one is loaded.
fn run_parallel(config: &RunConfig, setup: &Setup, workload: &[Query]) -> Result<RunOutput> {
    let default = setup.default_layout();
    let mut manager = setup.manager(config, vec![default.clone()], 1)?;
    let mut books = Books::new(config.alpha, config, &[default], LayoutId(0));
    let mut engine: Option<ParallelEngine> = None;
    let mut warm: BTreeSet<LayoutId> = [LayoutId(0)].into_iter().collect();
    let pc = ParallelConfig::new(config.q, config.alpha, sub_seed(config.seed, TAG_ENGINE));
    for q in workload {
        let (held, phase) = match &engine {
            Some(e) => (e.held().clone(), e.phase()),
            None => (warm.clone(), 0),
        };
        let ids: BTreeSet<LayoutId> = match &engine {
            Some(e) => e.states().clone(),
            None => warm.clone(),
        };
        let costs = books.costs(ids, q);
        let (served, loaded) = match engine.as_mut() {
            Some(e) => {
                let step = e.on_query(&costs)?;
                (step.served.expect("queries are always served"), step.loaded)
            }
            None => {
                let best = held.iter().copied().min_by(|a, b| costs[a].total_cmp(&costs[b]).then(a.cmp(b)));
                (best.expect("warm set is non-empty"), Vec::new())
            }
        };
        books.serving = served;
        let digest = engine.as_ref().map(|e| e.counters_digest());
        books.serve(q, phase, digest, Some(&costs));
        for id in loaded {
            books.load(q.seq, id, phase);
        }

        let protected = engine.as_ref().map_or_else(|| warm.clone(), |e| e.held().clone());
        for event in manager.step(q, &protected)?.events {
            match event {
                StateEvent::Add(l) => {
                    books.ledger.record_marker(q.seq, EventKind::Add, l.id, phase);
                    books.layouts.insert(l.id, l.clone());
                    match engine.as_mut() {
                        Some(e) => e.add_state(l.id)?,
                        None => {
                            warm.insert(l.id);
                            books.load(q.seq, l.id, phase);
                        }
                    }
                }
                StateEvent::Remove(id) => {
                    books.ledger.record_marker(q.seq, EventKind::Remove, id, phase);
                    match engine.as_mut() {
                        // the engine keeps at least q layouts
                        Some(e) if e.states().len() <= config.q => {}
                        Some(e) => {
                            for l in e.remove_state(id)?.loaded {
                                books.load(q.seq, l, phase);
                            }
                            books.layouts.remove(&id);
                        }
                        None => {
                            warm.remove(&id);
                            books.layouts.remove(&id);
                        }
                    }
                }
            }
        }
        if engine.is_none() && warm.len() >= config.q {
            engine = Some(ParallelEngine::new(pc, warm.iter().copied())?);
        }
        books.track_size(q.seq, manager.state_space().len());
    }
    let phases = engine.as_ref().map_or(1, |e| e.phase() + 1);
    Ok(books.finish(config, workload.len(), phases))
}
