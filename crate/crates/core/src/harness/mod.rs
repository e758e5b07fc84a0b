//! Experiment orchestration: configuration, training runs, evaluation
//! metrics, generalisation tests, ablations and CSV output.

mod ablation;
mod config;
mod experiment;
mod generalize;
mod metrics;
mod output;

pub use ablation::{ablation_variants, run_ablation, AblationSuite};
pub use config::{EntropyMode, ExperimentConfig, Preset};
pub use experiment::{
    evaluate_success, median, median_first_success, run_experiment, run_seed, ExperimentResult,
    RunResult,
};
pub use generalize::{
    evaluate_generalization, gc_rollout, skill_rollout, uniform_rollout, GeneralizationConfig,
    GeneralizationResult, PolicyKind, Rollout,
};
pub use metrics::{
    aggregate, empirical_entropy_metric, max_and_mean, mean_std, occupancy, AggregateRecord,
    MetricsRecord,
};
pub use output::{
    emit_outputs, read_aggregate_csv, read_metrics_csv, write_generalization_csv, write_metrics_csv,
};
