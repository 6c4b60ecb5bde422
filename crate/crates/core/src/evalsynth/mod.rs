//! Evaluation: graded metrics, chronological protocols, method comparison
//! reports, and a synthetic log generator with planted ground truth.

mod generate;
mod labels;
mod metrics;
mod protocol;
mod report;

pub use generate::{generate, CurveRange, SynthOutput, SynthSpec, SYNTH_FILES};
pub use labels::{events_from_csv, events_to_csv, load_events, EventRecord, GradedLabelSet, PERIOD_OFFSET_DAYS};
pub use metrics::{gain, metric_vector, ndcg_at_k, recall_at_k, METRICS};
pub use protocol::{chronological_bins, paired_t_test, rolling_cv, split_train_test_by_month, Fold};
pub use report::{build_report, MethodEval, Report, ReportRow};

#[cfg(test)]
mod tests;
