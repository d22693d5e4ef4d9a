//! Experiment runner: family defaults, suites over seeds and policies, traces.

mod defaults;
mod suite;
mod trace;

pub use defaults::{
    default_ipm_config, default_policy, default_spec, parse_mode, resolve_ipm_config, resolve_policy, with_size,
    IpmOverrides, PolicyKind, PolicyOverrides,
};
pub use suite::{
    parse_seeds, reduction_percent, run_one, run_suite, summarize, write_runs_csv, write_suite_csv,
    write_summary_csv, RunRecord, SuiteConfig, SuiteOutcome, SummaryRow, RUNS_HEADER, SUMMARY_HEADER,
};
pub use trace::{emit_trace, final_residuals, orders_of_magnitude, TraceOutput};
