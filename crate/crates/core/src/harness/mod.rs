//! Experiment orchestration: cross-validated comparisons of every technique,
//! aging sweeps, and summaries of the resulting tables.

mod aging;
mod combinations;
mod compare;
mod report;
mod source;
mod technique;

pub use aging::{run_aging, AgingConfig, AgingCurve, AgingOutput, AgingTechnique};
pub use combinations::{make_combinations, SetCombination};
pub use compare::{
    run_comparison, CombinationResult, ComparisonOutput, Metric, RunConfig, KALMAN_WARMUP_PACKETS,
};
pub use report::{format_summary, summarize, SummaryRow};
pub use source::{
    estimate_file_name, require_files, set_seed, trace_file_name, GeneratedSource, RecordStream,
    TraceSource,
};
pub use technique::{DetectorKind, Technique, COMBINED_KALMAN_ORDER};
