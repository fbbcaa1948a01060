//! Prompt assembly from the bundled templates, reply parsing and the
//! random-legal fallback.

pub mod template;

use std::sync::LazyLock;

use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoders::{EncodedObservation, Granularity, Grounding, OracleFlag, RepresentationSpec};
use crate::env::{EnvSpec, Family, FamilyState};
use crate::memory::TrajectoryMemory;
use template::Template;

pub const AGENT_TEMPLATE: &str = include_str!("../../assets/templates/agent.txt");
pub const SUMMARIZER_TEMPLATE: &str = include_str!("../../assets/templates/summarizer.txt");
pub const VOT_TEMPLATE: &str = include_str!("../../assets/templates/vot.txt");

pub const HANOI_MANUAL: &str = include_str!("../../assets/manuals/hanoi.txt");
pub const MESSENGER_MANUAL: &str = include_str!("../../assets/manuals/messenger.txt");
pub const BABYAI_MANUAL: &str = include_str!("../../assets/manuals/babyai.txt");

static AGENT: LazyLock<Template> = LazyLock::new(|| Template::parse(AGENT_TEMPLATE).expect("agent template"));
static SUMMARIZER: LazyLock<Template> =
    LazyLock::new(|| Template::parse(SUMMARIZER_TEMPLATE).expect("summarizer template"));
static VOT: LazyLock<Template> = LazyLock::new(|| Template::parse(VOT_TEMPLATE).expect("vot template"));

static ACTION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Action:\s*[\[\(]*\s*(\d+)").expect("action regex"));
static REASON_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"Reason:\s*(.*)").expect("reason regex"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    Agent,
    AgentVoT,
    Summariser,
}

/// Everything sent to the model for one call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    /// Always empty: the whole template goes in one user message.
    pub system_text: String,
    pub user_text: String,
    pub image: Option<Vec<u8>>,
    pub action_count: usize,
    pub template_id: TemplateId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("observation is encoded as {got} but the representation asks for {want}")]
    StructureMismatch {
        want: crate::encoders::Structure,
        got: crate::encoders::Structure,
    },
    #[error("image grounding needs an image attachment")]
    MissingImage,
    #[error("the VoT template needs TextPlusVoT grounding")]
    NotVot,
    #[error("OracleVoT is set but no oracle map was supplied")]
    MissingOracleMap,
    #[error("{0}")]
    Representation(#[from] crate::encoders::RepresentationError),
}

/// Environment manual with the episode's aliases filled in.
pub fn manual(spec: &EnvSpec, state: &FamilyState) -> String {
    match (spec.family, state) {
        (Family::Hanoi, FamilyState::Hanoi(s)) => {
            let n = s.n_disks();
            HANOI_MANUAL
                .replace("{n_disks}", &n.to_string())
                .replace("{largest}", &n.saturating_sub(1).to_string())
        }
        (Family::Messenger, FamilyState::Messenger(s)) => {
            let table = s.synonyms();
            MESSENGER_MANUAL
                .replace("{message}", &table.message.synonym)
                .replace("{goal}", &table.goal.synonym)
                .replace("{enemy}", &table.enemy.synonym)
        }
        _ => BABYAI_MANUAL.to_string(),
    }
}

/// Question slot: the numbered action list.
pub fn question(action_labels: &[String]) -> String {
    let mut out = String::from("Which action do you take next? Available actions:");
    for (i, label) in action_labels.iter().enumerate() {
        out.push_str(&format!("\n{}. {label}", i + 1));
    }
    out
}

pub fn summary_block(summary: &str) -> String {
    format!("Summary of past actions:\n{summary}")
}

/// Trajectory slot: the long-form body or the summary block.
pub fn trajectory_slot(spec: &RepresentationSpec, memory: &TrajectoryMemory, window: usize) -> String {
    match spec.granularity {
        Granularity::LongForm => memory.long_form_body(window),
        Granularity::Summary => summary_block(memory.rolling_summary()),
    }
}

pub fn oracle_map_note(map: &str) -> String {
    format!(
        "\n\nGround-truth map of the current state:\n{map}\n\
         Use this map as your Map (Top-Down View) instead of drawing one, and respond with \
         the remaining sections: Map Update Notes, Reasoning, Action and Summary."
    )
}

fn check(spec: &RepresentationSpec, encoded: &EncodedObservation) -> Result<(), PromptError> {
    spec.validate(None)?;
    if encoded.format_label != spec.structure {
        return Err(PromptError::StructureMismatch {
            want: spec.structure,
            got: encoded.format_label,
        });
    }
    if spec.grounding == Grounding::TextPlusImage && encoded.image.is_none() {
        return Err(PromptError::MissingImage);
    }
    Ok(())
}

fn bundle(user_text: String, spec: &RepresentationSpec, encoded: &EncodedObservation, n: usize, id: TemplateId) -> PromptBundle {
    let image = if spec.grounding == Grounding::TextPlusImage {
        encoded.image.clone()
    } else {
        None
    };
    PromptBundle {
        system_text: String::new(),
        user_text,
        image,
        action_count: n,
        template_id: id,
    }
}

/// Agent template with all four slots filled.
pub fn build_agent_prompt(
    spec: &RepresentationSpec,
    manual: &str,
    encoded: &EncodedObservation,
    memory: &TrajectoryMemory,
    window: usize,
    action_labels: &[String],
) -> Result<PromptBundle, PromptError> {
    check(spec, encoded)?;
    let trajectory = trajectory_slot(spec, memory, window);
    let q = question(action_labels);
    let text = AGENT
        .render(&[
            ("manual", manual),
            ("obs", &encoded.text),
            ("trajectory", &trajectory),
            ("question", &q),
        ])
        .expect("agent template slots");
    Ok(bundle(text, spec, encoded, action_labels.len(), TemplateId::Agent))
}

/// VoT template; with OracleVoT the supplied ground-truth map is appended.
pub fn build_vot_prompt(
    spec: &RepresentationSpec,
    manual: &str,
    encoded: &EncodedObservation,
    memory: &TrajectoryMemory,
    window: usize,
    action_labels: &[String],
    oracle_map: Option<&str>,
) -> Result<PromptBundle, PromptError> {
    check(spec, encoded)?;
    if spec.grounding != Grounding::TextPlusVoT {
        return Err(PromptError::NotVot);
    }
    let trajectory = trajectory_slot(spec, memory, window);
    let q = question(action_labels);
    let mut text = VOT
        .render(&[
            ("manual", manual),
            ("obs", &encoded.text),
            ("trajectory", &trajectory),
            ("question", &q),
        ])
        .expect("vot template slots");
    if spec.has(OracleFlag::OracleVoT) {
        text.push_str(&oracle_map_note(oracle_map.ok_or(PromptError::MissingOracleMap)?));
    }
    Ok(bundle(text, spec, encoded, action_labels.len(), TemplateId::AgentVoT))
}

/// Picks the template the grounding calls for.
pub fn build_prompt(
    spec: &RepresentationSpec,
    manual: &str,
    encoded: &EncodedObservation,
    memory: &TrajectoryMemory,
    window: usize,
    action_labels: &[String],
    oracle_map: Option<&str>,
) -> Result<PromptBundle, PromptError> {
    if spec.grounding == Grounding::TextPlusVoT {
        build_vot_prompt(spec, manual, encoded, memory, window, action_labels, oracle_map)
    } else {
        build_agent_prompt(spec, manual, encoded, memory, window, action_labels)
    }
}

pub fn summary_prompt(manual: &str, recent_history: &str, previous_summary: &str) -> String {
    SUMMARIZER
        .render(&[
            ("manual", manual),
            ("recent_history", recent_history),
            ("previous_summary", previous_summary),
        ])
        .expect("summarizer template slots")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedAction {
    pub action_index: usize,
    pub reason: String,
    pub raw_reply: String,
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseFailure {
    #[error("no `Action: <number>` in reply")]
    NoAction { raw_reply: String },
    #[error("action {index} is outside 1..={count}")]
    OutOfRange {
        index: String,
        count: usize,
        raw_reply: String,
    },
}

/// Canonical action line.
pub fn format_action(index: usize, reason: &str) -> String {
    format!("Action: {index}. Reason: {reason}")
}

pub fn parse_action(raw_reply: &str, action_count: usize) -> Result<ParsedAction, ParseFailure> {
    let caps = ACTION_RE.captures(raw_reply).ok_or_else(|| ParseFailure::NoAction {
        raw_reply: raw_reply.to_string(),
    })?;
    let digits = &caps[1];
    let index = digits
        .parse::<usize>()
        .ok()
        .filter(|i| (1..=action_count).contains(i))
        .ok_or_else(|| ParseFailure::OutOfRange {
            index: digits.to_string(),
            count: action_count,
            raw_reply: raw_reply.to_string(),
        })?;
    let after = caps.get(0).expect("whole match").end();
    let reason = REASON_RE
        .captures(&raw_reply[after..])
        .map(|c| c[1].trim().to_string())
        .unwrap_or_default();
    Ok(ParsedAction {
        action_index: index,
        reason,
        raw_reply: raw_reply.to_string(),
        fallback_used: false,
    })
}

/// Uniform legal action after the retry also failed.
pub fn resolve_fallback(failure: &ParseFailure, action_count: usize, rng: &mut impl Rng) -> ParsedAction {
    let raw_reply = match failure {
        ParseFailure::NoAction { raw_reply } | ParseFailure::OutOfRange { raw_reply, .. } => raw_reply.clone(),
    };
    ParsedAction {
        action_index: rng.random_range(1..=action_count),
        reason: String::new(),
        raw_reply,
        fallback_used: true,
    }
}
