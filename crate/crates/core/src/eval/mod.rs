//! Experiment driver, statistics, reports and replayable logs.

pub mod log;
pub mod report;
pub mod runner;
pub mod stats;

pub use log::{read_jsonl, replay, to_jsonl, write_jsonl, LogError, Manifest, ManifestEntry, ReplayMismatch};
pub use report::{emit_report, render_csv, render_markdown, summarize, summarize_default, ConditionSummary, Report};
pub use runner::{run_episode, run_experiment, run_with_gateway, EpisodeRecord, RunConfig, RunError, StepRecord};
pub use stats::{bootstrap_mean_diff, score_per_kilo_token, ComparisonResult, MetricError};
