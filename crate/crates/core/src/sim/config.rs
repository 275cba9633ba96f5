use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::manager::{CandidateKind, CandidateSource};
use crate::policy::PolicyKind;

use super::workload::{DatasetSpec, TemplateWorkloadSpec};

/// Everything one simulation run needs. Parsed from flat `key = value` text.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub policy: PolicyKind,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub window_w: usize,
    pub reservoir_r: usize,
    pub lambda: f64,
    pub regen_period: usize,
    pub prune_period: Option<usize>,
    pub candidate_kind: CandidateKind,
    pub candidate_source: CandidateSource,
    pub delay: usize,
    pub budget: usize,
    pub q: usize,
    pub stay_on_reset: bool,
    pub sample_rows: usize,
    /// Write every available state's cost on each query event.
    pub record_costs: bool,
    pub seed: u64,
    pub dataset: Option<PathBuf>,
    pub workload: Option<PathBuf>,
    pub dataset_spec: DatasetSpec,
    pub workload_spec: TemplateWorkloadSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            policy: PolicyKind::Dumts,
            alpha: 80.0,
            gamma: 1.0,
            epsilon: 0.08,
            window_w: 200,
            reservoir_r: 64,
            lambda: 0.01,
            regen_period: 100,
            prune_period: None,
            candidate_kind: CandidateKind::QdTree,
            candidate_source: CandidateSource::Window,
            delay: 0,
            budget: 32,
            q: 2,
            stay_on_reset: true,
            sample_rows: 4096,
            record_costs: false,
            seed: 0,
            dataset: None,
            workload: None,
            dataset_spec: DatasetSpec::default(),
            workload_spec: TemplateWorkloadSpec::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| Error::Config(format!("{key}: cannot parse '{value}': {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 27] = [
        "policy",
        "alpha",
        "gamma",
        "epsilon",
        "window_w",
        "reservoir_r",
        "lambda",
        "regen_period",
        "prune_period",
        "candidate_kind",
        "candidate_source",
        "delay",
        "budget",
        "q",
        "stay_on_reset",
        "sample_rows",
        "record_costs",
        "seed",
        "dataset",
        "workload",
        "rows",
        "numeric_columns",
        "categorical_columns",
        "cardinality",
        "templates",
        "queries",
        "dwell_p",
    ];

    /// Set one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "policy" => self.policy = value.parse()?,
            "alpha" => self.alpha = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "window_w" => self.window_w = parse(key, value)?,
            "reservoir_r" => self.reservoir_r = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "regen_period" => self.regen_period = parse(key, value)?,
            "prune_period" => {
                let p: usize = parse(key, value)?;
                self.prune_period = (p > 0).then_some(p);
            }
            "candidate_kind" => self.candidate_kind = value.parse()?,
            "candidate_source" => self.candidate_source = value.parse()?,
            "delay" => self.delay = parse(key, value)?,
            "budget" => self.budget = parse(key, value)?,
            "q" => self.q = parse(key, value)?,
            "stay_on_reset" => self.stay_on_reset = parse_bool(key, value)?,
            "sample_rows" => self.sample_rows = parse(key, value)?,
            "record_costs" => self.record_costs = parse_bool(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "workload" => self.workload = Some(PathBuf::from(value)),
            "rows" => self.dataset_spec.rows = parse(key, value)?,
            "numeric_columns" => self.dataset_spec.numeric_columns = parse(key, value)?,
            "categorical_columns" => self.dataset_spec.categorical_columns = parse(key, value)?,
            "cardinality" => self.dataset_spec.cardinality = parse(key, value)?,
            "templates" => self.workload_spec.num_templates = parse(key, value)?,
            "queries" => self.workload_spec.total_queries = parse(key, value)?,
            "dwell_p" => self.workload_spec.dwell_p = Some(parse(key, value)?),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Apply `key = value` lines on top of the current values. Blank lines
    /// and `#` comments are skipped.
    pub fn apply_kv(&mut self, text: &str, source: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: source.to_string(),
                line: i + 1,
                msg: format!("expected key = value, got '{line}'"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse { path: source.to_string(), line: i + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        c.apply_kv(text, "<config>")?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = RunConfig::default();
        c.apply_kv(&text, &path.display().to_string())?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("policy", self.policy.to_string());
        put("alpha", self.alpha.to_string());
        put("gamma", self.gamma.to_string());
        put("epsilon", self.epsilon.to_string());
        put("window_w", self.window_w.to_string());
        put("reservoir_r", self.reservoir_r.to_string());
        put("lambda", self.lambda.to_string());
        put("regen_period", self.regen_period.to_string());
        put("prune_period", self.prune_period.unwrap_or(0).to_string());
        put("candidate_kind", self.candidate_kind.as_str().to_string());
        put("candidate_source", self.candidate_source.as_str().to_string());
        put("delay", self.delay.to_string());
        put("budget", self.budget.to_string());
        put("q", self.q.to_string());
        put("stay_on_reset", self.stay_on_reset.to_string());
        put("sample_rows", self.sample_rows.to_string());
        put("record_costs", self.record_costs.to_string());
        put("seed", self.seed.to_string());
        if let Some(p) = &self.dataset {
            put("dataset", p.display().to_string());
        }
        if let Some(p) = &self.workload {
            put("workload", p.display().to_string());
        }
        put("rows", self.dataset_spec.rows.to_string());
        put("numeric_columns", self.dataset_spec.numeric_columns.to_string());
        put("categorical_columns", self.dataset_spec.categorical_columns.to_string());
        put("cardinality", self.dataset_spec.cardinality.to_string());
        put("templates", self.workload_spec.num_templates.to_string());
        put("queries", self.workload_spec.total_queries.to_string());
        if let Some(p) = self.workload_spec.dwell_p {
            put("dwell_p", p.to_string());
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return bad(format!("alpha must be a finite value > 1, got {}", self.alpha));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma must be a finite value >= 0, got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must be in [0, 1], got {}", self.epsilon));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        for (k, v) in [
            ("window_w", self.window_w),
            ("reservoir_r", self.reservoir_r),
            ("regen_period", self.regen_period),
            ("budget", self.budget),
            ("q", self.q),
            ("sample_rows", self.sample_rows),
        ] {
            if v == 0 {
                return bad(format!("{k} must be positive"));
            }
        }
        self.dataset_spec.validate()?;
        self.workload_spec.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_documented_ones() {
        let c = RunConfig::default();
        assert_eq!((c.alpha, c.gamma, c.epsilon, c.window_w, c.regen_period, c.delay), (80.0, 1.0, 0.08, 200, 100, 0));
        c.validate().unwrap();
    }

    #[test]
    fn kv_round_trip() {
        let text = "# comment\npolicy = oreo\nalpha=10\n\ndelay = 5 # trailing\nprune_period = 50\ndwell_p = 0.01\n";
        let c = RunConfig::from_kv(text).unwrap();
        assert_eq!(c.policy, PolicyKind::Dumts);
        assert_eq!((c.alpha, c.delay, c.prune_period), (10.0, 5, Some(50)));
        assert_eq!(RunConfig::from_kv(&c.to_kv()).unwrap(), c);
    }

    #[test]
    fn precise_errors() {
        let e = RunConfig::from_kv("alpha = 1").unwrap_err().to_string();
        assert!(e.contains("alpha must be"), "{e}");
        let e = RunConfig::from_kv("alpah = 3").unwrap_err().to_string();
        assert!(e.contains(":1:") && e.contains("alpah"), "{e}");
        let e = RunConfig::from_kv("alpha 3").unwrap_err().to_string();
        assert!(e.contains("key = value"), "{e}");
        assert!(RunConfig::from_kv("epsilon = 1.5").is_err());
        assert!(RunConfig::from_kv("policy = wfit").is_err());
    }
}
