use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use relayout::manager::CandidateSource;
use relayout::model::io::{save_dataset, save_queries};
use relayout::policy::PolicyKind;
use relayout::sim::{
    load_inputs, load_trace, oracle_from_trace, parse_list, run_simulation, save_trace, summaries_to_csv, sweep,
    trace_alpha, RunConfig, SweepGrid,
};
use relayout::verify::{run_check, CHECKS};

/// Relative output paths are resolved against this directory when set.
const OUT_DIR_ENV: &str = "RELAYOUT_OUT_DIR";

const EXIT_CONFIG: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Parser)]
#[command(name = "relayout", version, about = "Simulate online data-layout reorganization policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    GenData {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write a template workload as line-delimited JSON.
    GenWorkload {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run one policy and write its trace and summary.
    Run {
        #[arg(long)]
        seed: u64,
        /// Trace output (line-delimited JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary CSV output; printed to stdout when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the cross product of the given parameter lists.
    Sweep {
        /// Comma-separated seeds.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        policies: Option<String>,
        #[arg(long)]
        alphas: Option<String>,
        #[arg(long)]
        epsilons: Option<String>,
        #[arg(long)]
        gammas: Option<String>,
        #[arg(long)]
        delays: Option<String>,
        #[arg(long)]
        sources: Option<String>,
        #[arg(long)]
        qs: Option<String>,
        /// Summary CSV output; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Offline optimum of a trace recorded with `--record-costs true`.
    Oracle {
        #[arg(long)]
        trace: PathBuf,
        /// Movement cost; read from the trace's first switch when absent.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Run the acceptance checks.
    Verify {
        /// Comma-separated check ids; all when absent.
        #[arg(long)]
        only: Option<String>,
    },
}

/// Settings shared by every command that builds a run configuration. Flags
/// override the config file, which overrides the defaults.
#[derive(Args, Default)]
struct ConfigArgs {
    /// File of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    window_w: Option<String>,
    #[arg(long)]
    reservoir_r: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    regen_period: Option<String>,
    #[arg(long)]
    prune_period: Option<String>,
    #[arg(long)]
    candidate_kind: Option<String>,
    #[arg(long)]
    candidate_source: Option<String>,
    #[arg(long)]
    delay: Option<String>,
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    stay_on_reset: Option<String>,
    #[arg(long)]
    sample_rows: Option<String>,
    #[arg(long)]
    record_costs: Option<String>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    workload: Option<String>,
    #[arg(long)]
    rows: Option<String>,
    #[arg(long)]
    numeric_columns: Option<String>,
    #[arg(long)]
    categorical_columns: Option<String>,
    #[arg(long)]
    cardinality: Option<String>,
    #[arg(long)]
    templates: Option<String>,
    #[arg(long)]
    queries: Option<String>,
    #[arg(long)]
    dwell_p: Option<String>,
}

impl ConfigArgs {
    fn build(&self, seed: u64) -> relayout::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("policy", &self.policy),
            ("alpha", &self.alpha),
            ("gamma", &self.gamma),
            ("epsilon", &self.epsilon),
            ("window_w", &self.window_w),
            ("reservoir_r", &self.reservoir_r),
            ("lambda", &self.lambda),
            ("regen_period", &self.regen_period),
            ("prune_period", &self.prune_period),
            ("candidate_kind", &self.candidate_kind),
            ("candidate_source", &self.candidate_source),
            ("delay", &self.delay),
            ("budget", &self.budget),
            ("q", &self.q),
            ("stay_on_reset", &self.stay_on_reset),
            ("sample_rows", &self.sample_rows),
            ("record_costs", &self.record_costs),
            ("dataset", &self.dataset),
            ("workload", &self.workload),
            ("rows", &self.rows),
            ("numeric_columns", &self.numeric_columns),
            ("categorical_columns", &self.categorical_columns),
            ("cardinality", &self.cardinality),
            ("templates", &self.templates),
            ("queries", &self.queries),
            ("dwell_p", &self.dwell_p),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                c.set(key, v)?;
            }
        }
        c.seed = seed;
        c.validate()?;
        Ok(c)
    }
}

fn out_path(path: &Path) -> anyhow::Result<PathBuf> {
    let full = match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    };
    if let Some(parent) = full.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(full)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    let p = out_path(path)?;
    std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

fn opt_list<T: std::str::FromStr>(key: &str, text: &Option<String>) -> relayout::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.as_deref().map_or(Ok(Vec::new()), |t| parse_list(key, t))
}

fn execute(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::GenData { seed, out, config } => {
            let c = config.build(seed)?;
            let (data, _) = load_inputs(&c)?;
            save_dataset(&data, &out_path(&out)?)?;
        }
        Command::GenWorkload { seed, out, config } => {
            let c = config.build(seed)?;
            let (_, workload) = load_inputs(&c)?;
            save_queries(&workload, &out_path(&out)?)?;
        }
        Command::Run { seed, out, summary, config } => {
            let c = config.build(seed)?;
            let (data, workload) = load_inputs(&c)?;
            let result = run_simulation(&c, data, &workload)?;
            if let Some(p) = out {
                save_trace(result.ledger.events(), &out_path(&p)?)?;
            }
            let csv = summaries_to_csv(std::slice::from_ref(&result.summary));
            match summary {
                Some(p) => write_text(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Sweep { seeds, policies, alphas, epsilons, gammas, delays, sources, qs, out, config } => {
            let seeds: Vec<u64> = parse_list("seeds", &seeds)?;
            if seeds.is_empty() {
                return Err(relayout::Error::Config("--seeds needs at least one seed".into()).into());
            }
            let base = config.build(seeds[0])?;
            let grid = SweepGrid {
                policies: opt_list::<PolicyKind>("policies", &policies)?,
                alphas: opt_list("alphas", &alphas)?,
                epsilons: opt_list("epsilons", &epsilons)?,
                gammas: opt_list("gammas", &gammas)?,
                delays: opt_list("delays", &delays)?,
                sources: opt_list::<CandidateSource>("sources", &sources)?,
                qs: opt_list("qs", &qs)?,
                seeds,
            };
            let csv = summaries_to_csv(&sweep(&base, &grid)?);
            match out {
                Some(p) => write_text(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Oracle { trace, alpha } => {
            let events = load_trace(&trace)?;
            let alpha = match alpha.or_else(|| trace_alpha(&events)) {
                Some(a) => a,
                None => bail!(relayout::Error::Config(format!(
                    "{} has no switch events to read the movement cost from; pass --alpha",
                    trace.display()
                ))),
            };
            let r = oracle_from_trace(&events, alpha)?;
            println!("queries {}", r.online.queries);
            println!("online total {:.6} (query {:.6}, reorg {:.6}, switches {})", r.online.total(), r.online.query_cost, r.online.reorg_cost, r.online.switches);
            println!("optimum total {:.6} (switches {})", r.optimum.total, r.optimum.switches);
            println!("ratio {:.6}", r.ratio);
        }
        Command::Verify { only } => {
            let ids: Vec<u8> = match only {
                Some(t) => parse_list("only", &t)?,
                None => CHECKS.iter().map(|(id, _)| *id).collect(),
            };
            let mut failed = 0;
            for id in ids {
                let report = run_check(id)?;
                failed += usize::from(!report.passed);
                println!("{report}");
            }
            if failed > 0 {
                println!("{failed} acceptance checks failed");
                return Ok(ExitCode::from(EXIT_ACCEPTANCE));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use relayout::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::Config(_) | E::Parse { .. } | E::InvalidParameter(_) | E::Unsupported(_)) => EXIT_CONFIG,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
