//! Per-condition aggregates and their CSV and Markdown renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::log::LogError;
use super::runner::EpisodeRecord;
use super::stats::{bootstrap_mean_diff, mean, score_per_kilo_token, sd, ComparisonResult, DEFAULT_LEVEL, DEFAULT_RESAMPLES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentNote {
    pub run_index: u32,
    pub episode_index: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub environment: String,
    pub condition: String,
    /// Scored episodes, incidents excluded.
    pub episodes: usize,
    pub mean: f64,
    /// Over episode scores.
    pub sd: f64,
    pub run_means: Vec<f64>,
    pub run_mean: f64,
    /// Over per-run means.
    pub run_sd: f64,
    pub score_per_kilo_token: Option<f64>,
    pub fallback_steps: usize,
    pub total_steps: usize,
    pub summary_violations: u32,
    pub incidents: Vec<IncidentNote>,
    /// Against the baseline of the same environment, when there is one.
    pub comparison: Option<ComparisonResult>,
}

impl ConditionSummary {
    pub fn fallback_rate(&self) -> f64 {
        if self.total_steps == 0 {
            0.0
        } else {
            self.fallback_steps as f64 / self.total_steps as f64
        }
    }

    pub fn starred(&self) -> bool {
        self.comparison.as_ref().is_some_and(|c| c.significant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub baseline: Option<String>,
    pub resamples: usize,
    pub level: f64,
    pub conditions: Vec<ConditionSummary>,
}

fn scores(records: &[&EpisodeRecord]) -> Vec<f64> {
    records.iter().filter_map(|r| r.normalized_score).collect()
}

fn summarize_group(environment: &str, condition: &str, records: &[&EpisodeRecord]) -> ConditionSummary {
    let scored: Vec<&EpisodeRecord> = records.iter().copied().filter(|r| !r.is_incident()).collect();
    let episode_scores = scores(&scored);
    let mut by_run: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for r in &scored {
        by_run.entry(r.run_index).or_default().extend(r.normalized_score);
    }
    let run_means: Vec<f64> = by_run.values().map(|v| mean(v)).collect();
    let pairs: Vec<(f64, f64)> = scored
        .iter()
        .map(|r| (r.normalized_score.unwrap_or(0.0), r.mean_input_tokens()))
        .collect();
    ConditionSummary {
        environment: environment.to_string(),
        condition: condition.to_string(),
        episodes: scored.len(),
        mean: mean(&episode_scores),
        sd: sd(&episode_scores),
        run_mean: mean(&run_means),
        run_sd: sd(&run_means),
        run_means,
        score_per_kilo_token: score_per_kilo_token(&pairs).ok(),
        fallback_steps: records.iter().map(|r| r.fallback_count()).sum(),
        total_steps: records.iter().map(|r| r.steps.len()).sum(),
        summary_violations: records.iter().map(|r| r.summary_violations).sum(),
        incidents: records
            .iter()
            .filter_map(|r| {
                r.incident.as_ref().map(|m| IncidentNote {
                    run_index: r.run_index,
                    episode_index: r.seed.episode_index,
                    message: m.clone(),
                })
            })
            .collect(),
        comparison: None,
    }
}

/// Groups records by (environment, condition) and compares every group to
/// `baseline` within its environment. The result does not depend on the
/// order of `records`.
pub fn summarize(records: &[EpisodeRecord], baseline: Option<&str>, resamples: usize, level: f64, seed: u64) -> Report {
    let mut groups: BTreeMap<(String, String), Vec<&EpisodeRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.environment.clone(), r.condition.clone()))
            .or_default()
            .push(r);
    }
    for group in groups.values_mut() {
        group.sort_by_key(|r| (r.run_index, r.seed.run_seed, r.seed.episode_index));
    }
    let mut conditions = Vec::new();
    for ((env, cond), group) in &groups {
        let mut summary = summarize_group(env, cond, group);
        if let Some(base) = baseline.and_then(|b| groups.get(&(env.clone(), b.to_string()))) {
            let (a, b) = (scores(group), scores(base));
            if !a.is_empty() && !b.is_empty() {
                summary.comparison = Some(bootstrap_mean_diff(&a, &b, resamples, level, seed));
            }
        }
        conditions.push(summary);
    }
    Report {
        baseline: baseline.map(str::to_string),
        resamples,
        level,
        conditions,
    }
}

pub fn summarize_default(records: &[EpisodeRecord], baseline: Option<&str>) -> Report {
    summarize(records, baseline, DEFAULT_RESAMPLES, DEFAULT_LEVEL, 0)
}

fn fixed(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3}")
    } else {
        "n/a".to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), fixed)
}

fn csv_num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

pub const CSV_HEADER: [&str; 16] = [
    "environment",
    "condition",
    "episodes",
    "mean",
    "sd",
    "run_mean",
    "run_sd",
    "runs",
    "mean_diff",
    "ci_low",
    "ci_high",
    "significant",
    "score_per_kilo_token",
    "fallback_rate",
    "summary_violations",
    "incidents",
];

pub fn render_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory csv");
    for c in &report.conditions {
        let (diff, lo, hi, sig) = match &c.comparison {
            Some(r) => (csv_num(r.mean_diff), csv_num(r.ci_low), csv_num(r.ci_high), r.significant.to_string()),
            None => Default::default(),
        };
        w.write_record([
            c.environment.clone(),
            c.condition.clone(),
            c.episodes.to_string(),
            csv_num(c.mean),
            csv_num(c.sd),
            csv_num(c.run_mean),
            csv_num(c.run_sd),
            c.run_means.len().to_string(),
            diff,
            lo,
            hi,
            sig,
            c.score_per_kilo_token.map(csv_num).unwrap_or_default(),
            csv_num(c.fallback_rate()),
            c.summary_violations.to_string(),
            c.incidents.len().to_string(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 fields")
}

pub fn render_markdown(report: &Report) -> String {
    let mut out = String::from("# Results\n");
    let mut envs: Vec<&str> = report.conditions.iter().map(|c| c.environment.as_str()).collect();
    envs.dedup();
    for env in envs {
        let _ = write!(out, "\n## {env}\n\n");
        if let Some(b) = &report.baseline {
            let _ = writeln!(
                out,
                "Baseline `{b}`. `*` marks a bootstrap CI of the mean difference excluding 0 ({} resamples, {}% level).\n",
                report.resamples,
                report.level * 100.0
            );
        }
        out.push_str("| Condition | Episodes | Mean ± SD (episodes) | Mean ± SD (runs) | Diff vs baseline [CI] | Score/kTok | Fallback rate | Summary violations | Incidents |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|\n");
        for c in report.conditions.iter().filter(|c| c.environment == env) {
            let star = if c.starred() { "*" } else { "" };
            let diff = c.comparison.as_ref().map_or("n/a".to_string(), |r| {
                format!("{} [{}, {}]", fixed(r.mean_diff), fixed(r.ci_low), fixed(r.ci_high))
            });
            let _ = writeln!(
                out,
                "| `{}` | {} | {} ± {}{star} | {} ± {} (n={}) | {diff} | {} | {} | {} | {} |",
                c.condition,
                c.episodes,
                fixed(c.mean),
                fixed(c.sd),
                fixed(c.run_mean),
                fixed(c.run_sd),
                c.run_means.len(),
                opt(c.score_per_kilo_token),
                fixed(c.fallback_rate()),
                c.summary_violations,
                c.incidents.len(),
            );
        }
    }
    let incidents: Vec<(&ConditionSummary, &IncidentNote)> = report
        .conditions
        .iter()
        .flat_map(|c| c.incidents.iter().map(move |i| (c, i)))
        .collect();
    if !incidents.is_empty() {
        out.push_str("\n## Incidents (excluded from all statistics)\n\n");
        for (c, i) in incidents {
            let _ = writeln!(
                out,
                "- {} `{}` run {} episode {}: {}",
                c.environment, c.condition, i.run_index, i.episode_index, i.message
            );
        }
    }
    out
}

/// Writes `report.csv` and `report.md` into `dir`.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, LogError> {
    let mut written = Vec::new();
    for (name, text) in [("report.csv", render_csv(report)), ("report.md", render_markdown(report))] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|source| LogError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
