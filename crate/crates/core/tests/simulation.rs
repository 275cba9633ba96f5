use approx::assert_relative_eq;
use relayout::model::io::{load_dataset, load_queries, save_dataset, save_queries};
use relayout::policy::PolicyKind;
use relayout::sim::{
    load_inputs, load_trace, oracle_from_trace, run_simulation, save_trace, trace_totals, DatasetSpec, RunConfig,
    TemplateWorkloadSpec,
};

fn small(policy: PolicyKind) -> RunConfig {
    RunConfig {
        policy,
        alpha: 12.0,
        seed: 5,
        window_w: 60,
        regen_period: 30,
        budget: 8,
        sample_rows: 512,
        dataset_spec: DatasetSpec { rows: 2000, numeric_columns: 3, categorical_columns: 1, cardinality: 8 },
        workload_spec: TemplateWorkloadSpec { num_templates: 3, total_queries: 600, dwell_p: Some(0.01) },
        ..RunConfig::default()
    }
}

#[test]
fn trace_files_reconcile_with_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    for policy in PolicyKind::ALL {
        let c = small(policy);
        let (data, workload) = load_inputs(&c).unwrap();
        let out = run_simulation(&c, data, &workload).unwrap();
        let path = dir.path().join(format!("{policy}.jsonl"));
        save_trace(out.ledger.events(), &path).unwrap();
        let back = load_trace(&path).unwrap();
        let t = trace_totals(&back);
        assert_eq!(t.queries, 600);
        assert_eq!(t.switches, out.summary.switches);
        assert_relative_eq!(t.query_cost, out.summary.query_cost, max_relative = 1e-12);
        assert_relative_eq!(t.reorg_cost, out.summary.reorg_cost, max_relative = 1e-12);
        assert_relative_eq!(t.total(), out.summary.total_cost, max_relative = 1e-12);
    }
}

#[test]
fn inputs_written_to_disk_replay_identically() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(PolicyKind::Dumts);
    let (data, workload) = load_inputs(&c).unwrap();
    let (dp, wp) = (dir.path().join("d.csv"), dir.path().join("w.jsonl"));
    save_dataset(&data, &dp).unwrap();
    save_queries(&workload, &wp).unwrap();
    assert_eq!(load_queries(&wp).unwrap(), workload);
    assert_eq!(&load_dataset(&dp).unwrap(), data.as_ref());

    let from_files = RunConfig { dataset: Some(dp), workload: Some(wp), ..c.clone() };
    let (d2, w2) = load_inputs(&from_files).unwrap();
    let a = run_simulation(&c, data, &workload).unwrap();
    let b = run_simulation(&from_files, d2, &w2).unwrap();
    assert_eq!(a.ledger.events(), b.ledger.events());
}

#[test]
fn recorded_run_is_no_cheaper_than_its_optimum() {
    let c = RunConfig { record_costs: true, ..small(PolicyKind::Dumts) };
    let (data, workload) = load_inputs(&c).unwrap();
    let out = run_simulation(&c, data, &workload).unwrap();
    let r = oracle_from_trace(out.ledger.events(), c.alpha).unwrap();
    assert!(r.ratio >= 1.0, "{r:?}");
    assert_relative_eq!(r.online.total(), out.summary.total_cost, max_relative = 1e-12);
}

#[test]
fn config_files_load_and_name_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("run.conf");
    std::fs::write(&good, small(PolicyKind::Regret).to_kv()).unwrap();
    assert_eq!(RunConfig::load(&good).unwrap(), small(PolicyKind::Regret));
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "alpha = 3\nwindow = 9\n").unwrap();
    let e = RunConfig::load(&bad).unwrap_err().to_string();
    assert!(e.contains("bad.conf:2:"), "{e}");
    let missing = RunConfig { dataset: Some(dir.path().join("nope.csv")), ..small(PolicyKind::Static) };
    let e = load_inputs(&missing).unwrap_err().to_string();
    assert!(e.contains("nope.csv"), "{e}");
}
