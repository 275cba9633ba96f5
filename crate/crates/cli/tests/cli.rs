use std::path::Path;
use std::process::{Command, Output};

fn relayout(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_relayout"));
    cmd.args(args).env_remove("RELAYOUT_OUT_DIR");
    if let Some(d) = out_dir {
        cmd.env("RELAYOUT_OUT_DIR", d);
    }
    cmd.output().expect("binary runs")
}

const SMALL: [&str; 10] =
    ["--rows", "1500", "--queries", "400", "--templates", "3", "--window-w", "60", "--regen-period", "30"];

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn generate_run_and_score_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.csv");
    let w = dir.path().join("w.jsonl");
    let t = dir.path().join("trace.jsonl");
    let (ds, ws, ts) = (d.to_str().unwrap(), w.to_str().unwrap(), t.to_str().unwrap());

    let mut gen = vec!["gen-data", "--seed", "1", "--out", ds];
    gen.extend(SMALL);
    assert!(relayout(&gen, None).status.success());
    let mut gen = vec!["gen-workload", "--seed", "1", "--dataset", ds, "--out", ws];
    gen.extend(SMALL);
    let o = relayout(&gen, None);
    assert!(o.status.success(), "{}", text(&o.stderr));

    let mut run = vec!["run", "--policy", "oreo", "--alpha", "20", "--seed", "1", "--workload", ws, "--dataset", ds];
    run.extend(["--out", ts, "--record-costs", "true", "--window-w", "60", "--regen-period", "30"]);
    let o = relayout(&run, None);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.starts_with("policy,seed,alpha"), "{stdout}");
    assert!(stdout.lines().nth(1).unwrap().starts_with("dumts,1,20,"), "{stdout}");
    assert_eq!(std::fs::read_to_string(&t).unwrap().lines().filter(|l| l.contains("\"query\"")).count(), 400);

    let o = relayout(&["oracle", "--trace", ts, "--alpha", "20"], None);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let report = text(&o.stdout);
    let ratio: f64 = report.lines().find_map(|l| l.strip_prefix("ratio ")).unwrap().parse().unwrap();
    assert!(ratio >= 1.0, "{report}");
}

#[test]
fn same_seed_same_trace_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.jsonl", "b.jsonl"] {
        let mut args = vec!["run", "--seed", "4", "--policy", "regret", "--out", name];
        args.extend(SMALL);
        assert!(relayout(&args, Some(dir.path())).status.success());
    }
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(dir.path().join("b.jsonl")).unwrap());
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--seeds", "1,2", "--alphas", "10,40", "--policies", "static,greedy", "--out", "s.csv"];
    args.extend(SMALL);
    let o = relayout(&args, Some(dir.path()));
    assert!(o.status.success(), "{}", text(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn config_files_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "policy = static\nrows = 800\nqueries = 100\ntemplates = 2\n").unwrap();
    let o = relayout(&["run", "--seed", "2", "--config", conf.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).lines().nth(1).unwrap().starts_with("static,2,"));

    std::fs::write(&conf, "alpha = 0.5\n").unwrap();
    let o = relayout(&["run", "--seed", "2", "--config", conf.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("alpha"));

    let o = relayout(&["run", "--seed", "2", "--policy", "wfit"], None);
    assert_eq!(o.status.code(), Some(2));

    let missing = dir.path().join("missing.csv");
    let o = relayout(&["run", "--seed", "2", "--dataset", missing.to_str().unwrap()], None);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("missing.csv"), "{}", text(&o.stderr));

    let o = relayout(&["run", "--policy", "static"], None);
    assert!(!o.status.success(), "seed is mandatory");
    let o = relayout(&["run", "--seed", "1", "--frobnicate"], None);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("Usage"));
}

#[test]
fn oracle_needs_recorded_costs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--seed", "3", "--policy", "greedy", "--out", "t.jsonl"];
    args.extend(SMALL);
    assert!(relayout(&args, Some(dir.path())).status.success());
    let t = dir.path().join("t.jsonl");
    let o = relayout(&["oracle", "--trace", t.to_str().unwrap(), "--alpha", "80"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("record"), "{}", text(&o.stderr));
}

#[test]
fn verify_runs_a_subset() {
    let o = relayout(&["verify", "--only", "4"], None);
    assert!(o.status.success(), "{}", text(&o.stdout));
    assert!(text(&o.stdout).starts_with("PASS [4]"));
}
