//! Experiment harness: plans, parallel runs, result tables, significance
//! tests and report files.

pub mod experiment;
pub mod plan;
pub mod report;
pub mod wilcoxon;

pub use experiment::{run_experiment, size_band, CellSummary, Failure, ResultTable, RunRecord};
pub use plan::{expand_instances, ExperimentPlan, InstanceSource, Variant, VariantKind};
pub use report::{compare, compare_all, emit_report, read_results_csv, Comparison, ReportFiles, ALPHA};
pub use wilcoxon::{wilcoxon_one_tailed, Method, SignedRank, WilcoxonResult};
