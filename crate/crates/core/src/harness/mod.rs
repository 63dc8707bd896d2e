//! Metrics, paired multi-trial experiments, scenario presets, and reports.

pub mod config;
pub mod metrics;
pub mod report;
pub mod runner;

pub use config::{scenario_preset, Baseline, CorpusSource, ExperimentConfig, PRESET_NAMES};
pub use metrics::{confusion, f_measure, majority_share, ClassScore, ConfusionMatrix, MeanStd};
pub use report::{
    aggregate, load_trials, rebuild_report, write_json, write_table_csv, DiscriminatorResult,
    DiscriminatorSummary, MetricsReport, ModelResult, ModelSummary, PairedDelta, RateResult,
    RateSummary, TrialResult,
};
pub use runner::{
    load_experiment_corpus, run_trial, run_trials, trial_seed, unified_model_name,
    ExperimentOutcome, RunOptions,
};
