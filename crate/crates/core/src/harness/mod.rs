//! Experiment presets, case execution, summaries and table emission.

pub mod checks;
pub mod config;
pub mod preset;
pub mod run;
pub mod summary;
pub mod tables;

pub use checks::{bench_timing, theory_suite, TimingRow};
pub use config::{BootstrapConfig, HarnessConfig};
pub use preset::{CaseSpec, ExperimentPreset, Output, PresetName};
pub use run::{
    run_case, run_case_in, run_cases, CaseContext, CaseFailure, CaseOutcome, CaseResult, METRICS,
};
pub use summary::{quality_checks, summarize, Dz, DzFlag, MetricSummary, QualityRow, SummaryRow};
pub use tables::{emit_tables, fmt_float};
