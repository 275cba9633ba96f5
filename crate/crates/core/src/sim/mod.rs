//! Generators, the simulation loop, traces and parameter sweeps.

mod config;
mod kdim;
mod run;
mod star;
mod sweep;
mod trace;
mod workload;

pub use config::RunConfig;
pub use kdim::{gen_kdim_instance, BoxLayout, KDimInstance, Region, SyntheticKDimSpec};
pub use run::{load_inputs, run_simulation, sub_seed, summaries_from_csv, summaries_to_csv, RunOutput, Summary};
pub use star::{
    dip_transform, gen_star_schema, JoinKey, StarInstance, StarQuery, StarSchemaSpec, DIM_KEY, DIM_NOISE, DIM_REGION,
    DIM_SCORE, FACT_FK, FACT_M0, FACT_M1, REGIONS,
};
pub use sweep::{parse_list, sweep, SweepGrid};
pub use trace::{
    load_trace, oracle_from_trace, read_trace, save_trace, trace_alpha, trace_instance, trace_totals, write_trace,
    OracleReport, TraceTotals,
};
pub use workload::{
    gen_dataset, gen_template_workload, gen_templates, template_changes, DatasetSpec, Template, TemplateWorkloadSpec,
};
