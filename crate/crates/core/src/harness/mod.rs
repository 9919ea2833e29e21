//! Monte Carlo experiment harness.

pub mod config;
pub mod exec;
pub mod experiments;
pub mod output;
pub mod stats;
pub mod suites;

pub use config::{AlgoSelection, ExperimentConfig, Mode};
pub use exec::{map_trials, Execution};
pub use experiments::{
    cap_probability_experiment, estimate_p_e, queries_to_epsilon, run_cell, run_lemma_suite,
    run_selection, sweep, CapResult, CellSpec, LemmaReport, LemmaSuiteSpec,
};
pub use output::{emit_results, write_results, OutputFormat};
pub use stats::{wilson_interval, SummaryStats, TrialOutcome, Z95};
pub use suites::PropertyOutcome;
