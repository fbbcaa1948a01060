//! Per-episode trajectory store, the long-form history block and the
//! rolling summary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environments::hanoi::{HanoiState, Peg};
use crate::prompting;

pub const START_OF_GAME: &str = "Start of game";
/// Whitespace tokens the summariser is asked to stay within.
pub const SUMMARY_TOKEN_BUDGET: usize = 25;
/// Stored summaries are cut to this many whitespace tokens.
pub const SUMMARY_HARD_CAP: usize = 60;
const CONTINUATION_INDENT: &str = "        ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub timestep: u32,
    pub action_label: String,
    pub reward: f64,
    /// Observation after the action, encoded without the action echo.
    pub observation_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("expected timestep {expected}, got {got}")]
    TimestepGap { expected: u32, got: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMemory {
    records: Vec<TrajectoryRecord>,
    rolling_summary: String,
    summary_violations: u32,
    summary_failures: u32,
}

impl Default for TrajectoryMemory {
    fn default() -> Self {
        Self::new()
    }
}

/// What one summariser update did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryUpdate {
    pub summary: String,
    /// Prompts sent, paired with the replies received, in order.
    pub calls: Vec<(String, String)>,
    pub over_budget: bool,
    pub failed: bool,
}

pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Text after the last `Summary:` marker that has content, up to the end
/// of its line.
pub fn extract_summary(reply: &str) -> Option<String> {
    reply
        .rmatch_indices("Summary:")
        .map(|(i, m)| {
            reply[i + m.len()..]
                .lines()
                .next()
                .unwrap_or("")
                .trim()
                .to_string()
        })
        .find(|s| !s.is_empty())
}

impl TrajectoryMemory {
    pub fn new() -> Self {
        Self {
            records: Vec::new(),
            rolling_summary: START_OF_GAME.to_string(),
            summary_violations: 0,
            summary_failures: 0,
        }
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    pub fn rolling_summary(&self) -> &str {
        &self.rolling_summary
    }

    pub fn summary_violations(&self) -> u32 {
        self.summary_violations
    }

    pub fn summary_failures(&self) -> u32 {
        self.summary_failures
    }

    /// Appends the next record; timesteps start at 1 and have no gaps.
    pub fn push(&mut self, record: TrajectoryRecord) -> Result<(), MemoryError> {
        let expected = self.records.last().map_or(1, |r| r.timestep + 1);
        if record.timestep != expected {
            return Err(MemoryError::TimestepGap {
                expected,
                got: record.timestep,
            });
        }
        self.records.push(record);
        Ok(())
    }

    /// The most recent `window` records, one "Step K:" entry each, or
    /// `(none)`.
    pub fn long_form_body(&self, window: usize) -> String {
        let start = self.records.len().saturating_sub(window.max(1));
        let recent = &self.records[start..];
        if recent.is_empty() {
            return "(none)".to_string();
        }
        let mut out = Vec::new();
        for r in recent {
            let mut lines = r.observation_text.lines().filter(|l| !l.trim().is_empty());
            let mut head = format!("Step {}: You took action {}.", r.timestep, r.action_label);
            if let Some(first) = lines.next() {
                head.push(' ');
                head.push_str(first);
            }
            out.push(head);
            out.extend(lines.map(|l| format!("{CONTINUATION_INDENT}{l}")));
        }
        out.join("\n")
    }

    pub fn format_long_form(&self, window: usize) -> String {
        format!("Past trajectory:\n{}", self.long_form_body(window))
    }

    /// Stores `summary`, counting a violation above the budget and cutting
    /// at the hard cap. Returns whether it was over budget.
    pub fn set_summary(&mut self, summary: &str) -> bool {
        let tokens: Vec<&str> = summary.split_whitespace().collect();
        let over = tokens.len() > SUMMARY_TOKEN_BUDGET;
        if over {
            self.summary_violations += 1;
        }
        self.rolling_summary = if tokens.len() > SUMMARY_HARD_CAP {
            tokens[..SUMMARY_HARD_CAP].join(" ")
        } else {
            summary.to_string()
        };
        over
    }

    /// Stores a programmatic summary; the token budget binds only the
    /// summariser model.
    pub fn set_oracle_summary(&mut self, summary: &str) {
        self.rolling_summary = summary.to_string();
    }

    /// One rolling-summary step. `call` sends a prompt and returns the
    /// reply; a reply without a usable `Summary:` line is retried once,
    /// after which the previous summary is kept and a failure counted.
    pub fn update_summary<E>(
        &mut self,
        manual: &str,
        window: usize,
        mut call: impl FnMut(&str) -> Result<String, E>,
    ) -> Result<SummaryUpdate, E> {
        if self.records.is_empty() {
            self.rolling_summary = START_OF_GAME.to_string();
            return Ok(SummaryUpdate {
                summary: self.rolling_summary.clone(),
                calls: Vec::new(),
                over_budget: false,
                failed: false,
            });
        }
        let prompt =
            prompting::summary_prompt(manual, &self.long_form_body(window), &self.rolling_summary);
        let mut calls = Vec::new();
        for _ in 0..2 {
            let reply = call(&prompt)?;
            let parsed = extract_summary(&reply);
            calls.push((prompt.clone(), reply));
            if let Some(summary) = parsed {
                let over_budget = self.set_summary(&summary);
                return Ok(SummaryUpdate {
                    summary: self.rolling_summary.clone(),
                    calls,
                    over_budget,
                    failed: false,
                });
            }
        }
        self.summary_failures += 1;
        tracing::warn!(failures = self.summary_failures, "summariser reply had no Summary line");
        Ok(SummaryUpdate {
            summary: self.rolling_summary.clone(),
            calls,
            over_budget: false,
            failed: true,
        })
    }
}

fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [rest @ .., last] => format!("{}, and {last}", rest.join(", ")),
    }
}

/// Ground-truth summary of the current configuration and the goal.
pub fn oracle_summary_hanoi(state: &HanoiState) -> String {
    let mut clauses = Vec::new();
    let mut empty = Vec::new();
    for peg in Peg::ALL {
        let disks: Vec<String> = state.peg(peg).iter().map(u8::to_string).collect();
        match disks.len() {
            0 => empty.push(peg.to_string()),
            1 => clauses.push(format!("peg {peg} has disk {}", disks[0])),
            _ => clauses.push(format!(
                "peg {peg} has disks {} from bottom to top",
                join_list(&disks)
            )),
        }
    }
    match empty.len() {
        0 => {}
        1 => clauses.push(format!("peg {} is empty", empty[0])),
        _ => clauses.push(format!("pegs {} are empty", join_list(&empty))),
    }
    let mut text = clauses.join("; ");
    if let Some(first) = text.get(..1) {
        text.replace_range(..1, &first.to_uppercase());
    }
    format!("{text}. Goal: move all disks to peg {}.", state.goal())
}
