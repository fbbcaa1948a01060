//! Episode loop and the experiment driver.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encoders::{encode, encode_text, oracle_vot_map, Granularity, OracleFlag, RepresentationError, RepresentationSpec};
use crate::env::{Env, EnvError, EnvSpec, EpisodeSeed, Family, FamilyState, RngStream, TerminationCause};
use crate::llm::{CallContext, CallPurpose, Gateway, GatewayError, MockRegistry, ModelConfig, ModelReply};
use crate::memory::{oracle_summary_hanoi, TrajectoryMemory, TrajectoryRecord};
use crate::prompting::{self, parse_action, resolve_fallback, PromptBundle, PromptError, TemplateId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub environment: String,
    pub representation: RepresentationSpec,
    pub model: ModelConfig,
    pub episodes: u32,
    pub run_seed: u64,
    /// Independent repetitions; run r is seeded with `run_seed + r`.
    pub runs: u32,
    pub parallelism: usize,
}

impl RunConfig {
    /// Config with the environment's default episode count, one run and
    /// serial execution.
    pub fn new(environment: &str, representation: RepresentationSpec, model: ModelConfig) -> Result<Self, RunError> {
        let spec = EnvSpec::named(environment)?;
        Ok(Self {
            environment: environment.to_string(),
            representation,
            model,
            episodes: spec.default_episodes,
            run_seed: 0,
            runs: 1,
            parallelism: 1,
        })
    }

    pub fn validate(&self) -> Result<EnvSpec, RunError> {
        let spec = EnvSpec::named(&self.environment)?;
        self.representation.validate(Some(spec.family))?;
        if self.representation.has(OracleFlag::OracleSummary) && spec.family != Family::Hanoi {
            return Err(RunError::Config(format!(
                "OracleSummary is only defined for Hanoi, not `{}`",
                self.environment
            )));
        }
        if self.episodes == 0 {
            return Err(RunError::Config("episodes must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(RunError::Config("runs must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(RunError::Config("parallelism must be at least 1".into()));
        }
        self.model.validate()?;
        Ok(spec)
    }

    pub fn run_seed_for(&self, run_index: u32) -> u64 {
        self.run_seed.wrapping_add(u64::from(run_index))
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub timestep: u32,
    /// sha256 of the user text followed by the image bytes, if any.
    pub prompt_hash: String,
    pub encoded_obs: String,
    /// Agent replies at this step: one, or two after a re-query.
    pub replies: Vec<String>,
    pub action: usize,
    pub action_label: String,
    pub reason: String,
    pub reward: f64,
    /// Summed over the agent calls of this step.
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub approximate_tokens: bool,
    /// Summary shown in this step's prompt (Summary granularity only).
    pub summary_text: Option<String>,
    pub summary_input_tokens: u64,
    pub summary_output_tokens: u64,
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub environment: String,
    pub representation: RepresentationSpec,
    pub condition: String,
    pub model: String,
    pub run_index: u32,
    pub seed: EpisodeSeed,
    pub steps: Vec<StepRecord>,
    /// None for incidents.
    pub normalized_score: Option<f64>,
    pub termination_cause: TerminationCause,
    pub incident: Option<String>,
    pub summary_violations: u32,
    pub summary_failures: u32,
}

impl EpisodeRecord {
    pub fn is_incident(&self) -> bool {
        self.incident.is_some()
    }

    pub fn agent_calls(&self) -> usize {
        self.steps.iter().map(|s| s.replies.len()).sum()
    }

    /// Average input tokens per agent call; summariser calls excluded.
    pub fn mean_input_tokens(&self) -> f64 {
        let calls = self.agent_calls();
        if calls == 0 {
            return 0.0;
        }
        self.steps.iter().map(|s| s.input_tokens).sum::<u64>() as f64 / calls as f64
    }

    pub fn fallback_count(&self) -> usize {
        self.steps.iter().filter(|s| s.fallback_used).count()
    }
}

pub fn prompt_hash(bundle: &PromptBundle) -> String {
    let mut h = Sha256::new();
    h.update(bundle.user_text.as_bytes());
    if let Some(png) = &bundle.image {
        h.update(png);
    }
    hex::encode(h.finalize())
}

fn summariser_bundle(text: String) -> PromptBundle {
    PromptBundle {
        system_text: String::new(),
        user_text: text,
        image: None,
        action_count: 0,
        template_id: TemplateId::Summariser,
    }
}

struct Incident(String);

enum Failure {
    Incident(Incident),
    Fatal(RunError),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::Fatal(e)
    }
}

fn call(gateway: &Gateway, bundle: &PromptBundle, ctx: &CallContext) -> Result<ModelReply, Failure> {
    gateway.chat(bundle, ctx).map_err(|e| {
        if e.is_incident() {
            Failure::Incident(Incident(e.to_string()))
        } else {
            Failure::Fatal(e.into())
        }
    })
}

/// Runs one episode to termination or incident.
pub fn run_episode(
    spec: &EnvSpec,
    representation: &RepresentationSpec,
    gateway: &Gateway,
    seed: EpisodeSeed,
    run_index: u32,
) -> Result<EpisodeRecord, RunError> {
    let mut env = Env::reset(spec, seed)?;
    let manual = prompting::manual(spec, env.state());
    let window = spec.history_window as usize;
    let mut memory = TrajectoryMemory::new();
    let mut steps = Vec::new();
    let mut fallback_rng = seed.rng(RngStream::Fallback);
    let summary_mode = representation.granularity == Granularity::Summary;

    let mut incident = None;
    while !env.is_terminal() {
        match step_once(
            &mut env,
            representation,
            gateway,
            &manual,
            window,
            &mut memory,
            &mut fallback_rng,
            summary_mode,
        ) {
            Ok(step) => steps.push(step),
            Err(Failure::Incident(Incident(message))) => {
                tracing::warn!(?seed, %message, "episode aborted");
                incident = Some(message);
                break;
            }
            Err(Failure::Fatal(e)) => return Err(e),
        }
    }

    let normalized_score = if incident.is_none() {
        Some(env.normalized_score()?)
    } else {
        None
    };
    Ok(EpisodeRecord {
        environment: spec.name.clone(),
        representation: representation.clone(),
        condition: representation.label(),
        model: gateway.config().model_name.clone(),
        run_index,
        seed,
        steps,
        normalized_score,
        termination_cause: env.termination(),
        incident,
        summary_violations: memory.summary_violations(),
        summary_failures: memory.summary_failures(),
    })
}

#[allow(clippy::too_many_arguments)]
fn step_once(
    env: &mut Env,
    representation: &RepresentationSpec,
    gateway: &Gateway,
    manual: &str,
    window: usize,
    memory: &mut TrajectoryMemory,
    fallback_rng: &mut rand_chacha::ChaCha8Rng,
    summary_mode: bool,
) -> Result<StepRecord, Failure> {
    let seed = env.seed();
    let t = env.timestep();
    let spec = env.spec().clone();

    let (mut summary_in, mut summary_out) = (0u64, 0u64);
    if summary_mode {
        if representation.has(OracleFlag::OracleSummary) {
            if let FamilyState::Hanoi(s) = env.state() {
                memory.set_oracle_summary(&oracle_summary_hanoi(s));
            }
        } else if !memory.records().is_empty() {
            let ctx = CallContext {
                seed,
                timestep: t,
                attempt: 0,
                purpose: CallPurpose::Summary,
            };
            let mut attempt = 0;
            memory.update_summary(manual, window, |prompt| {
                let reply = call(
                    gateway,
                    &summariser_bundle(prompt.to_string()),
                    &CallContext { attempt, ..ctx },
                )?;
                attempt += 1;
                summary_in += reply.input_tokens;
                summary_out += reply.output_tokens;
                Ok::<_, Failure>(reply.text)
            })?;
        }
    }

    let summary_text = summary_mode.then(|| memory.rolling_summary().to_string());
    let encoded = encode(&env.observe(), representation).map_err(RunError::from)?;
    let oracle_map = representation
        .has(OracleFlag::OracleVoT)
        .then(|| oracle_vot_map(env.state()));
    let bundle = prompting::build_prompt(
        representation,
        manual,
        &encoded,
        memory,
        window,
        &spec.action_labels,
        oracle_map.as_deref(),
    )
    .map_err(RunError::from)?;

    let mut replies = Vec::new();
    let (mut input_tokens, mut output_tokens, mut approximate) = (0, 0, false);
    let mut parsed = None;
    let mut failure = None;
    for attempt in 0..2 {
        let ctx = CallContext {
            seed,
            timestep: t,
            attempt,
            purpose: CallPurpose::Agent,
        };
        let reply = call(gateway, &bundle, &ctx)?;
        input_tokens += reply.input_tokens;
        output_tokens += reply.output_tokens;
        approximate |= reply.approximate_tokens;
        let result = parse_action(&reply.text, spec.action_count());
        replies.push(reply.text);
        match result {
            Ok(p) => {
                parsed = Some(p);
                break;
            }
            Err(f) => failure = Some(f),
        }
    }
    let action = match parsed {
        Some(p) => p,
        None => {
            let f = failure.expect("a failed parse was recorded");
            resolve_fallback(&f, spec.action_count(), fallback_rng)
        }
    };

    let outcome = env.step(action.action_index).map_err(RunError::from)?;
    let label = spec.action_labels[action.action_index - 1].clone();
    let history_text =
        encode_text(&outcome.observation.without_last_action(), representation.structure).map_err(RunError::from)?;
    memory
        .push(TrajectoryRecord {
            timestep: t,
            action_label: label.clone(),
            reward: outcome.reward,
            observation_text: history_text,
        })
        .expect("timesteps follow the environment clock");

    Ok(StepRecord {
        timestep: t,
        prompt_hash: prompt_hash(&bundle),
        encoded_obs: encoded.text,
        replies,
        action: action.action_index,
        action_label: label,
        reason: action.reason,
        reward: outcome.reward,
        input_tokens,
        output_tokens,
        approximate_tokens: approximate,
        summary_text,
        summary_input_tokens: summary_in,
        summary_output_tokens: summary_out,
        fallback_used: action.fallback_used,
    })
}

/// Runs every (run, episode) pair of `config` against `gateway`. Records
/// come back sorted by run and episode index whatever the parallelism.
pub fn run_with_gateway(config: &RunConfig, gateway: &Gateway) -> Result<Vec<EpisodeRecord>, RunError> {
    let spec = config.validate()?;
    let jobs: Vec<(u32, EpisodeSeed)> = (0..config.runs)
        .flat_map(|r| (0..config.episodes).map(move |e| (r, e)))
        .map(|(r, e)| (r, EpisodeSeed::new(config.run_seed_for(r), u64::from(e))))
        .collect();
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(jobs.len()));
    std::thread::scope(|scope| {
        for _ in 0..config.parallelism.min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(run, seed)) = jobs.get(i) else { break };
                let result = run_episode(&spec, &config.representation, gateway, seed, run);
                results.lock().expect("results lock").push((i, result));
            });
        }
    });
    let mut results = results.into_inner().expect("results lock");
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}

/// Builds a gateway from `config.model` and runs the experiment.
pub fn run_experiment(config: &RunConfig, mocks: &MockRegistry) -> Result<Vec<EpisodeRecord>, RunError> {
    config.validate()?;
    let gateway = Gateway::new(config.model.clone(), mocks.clone())?;
    run_with_gateway(config, &gateway)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{Grounding, Structure};

    fn hanoi(spec: RepresentationSpec, policy: &str, episodes: u32) -> RunConfig {
        RunConfig {
            episodes,
            ..RunConfig::new("hanoi", spec, ModelConfig::mock(policy)).unwrap()
        }
    }

    fn long_form() -> RepresentationSpec {
        RepresentationSpec::new(Granularity::LongForm, Structure::DictList, Grounding::TextOnly)
    }

    #[test]
    fn optimal_mock_solves_hanoi() {
        let records = run_experiment(&hanoi(long_form(), "optimal", 3), &MockRegistry::with_builtins()).unwrap();
        assert_eq!(records.len(), 3);
        for r in &records {
            assert_eq!(r.normalized_score, Some(1.0));
            assert_eq!(r.steps.len(), 7);
            assert_eq!(r.termination_cause, TerminationCause::GoalReached);
            assert_eq!(r.fallback_count(), 0);
        }
    }

    #[test]
    fn gibberish_always_falls_back_after_one_retry() {
        let records = run_experiment(&hanoi(long_form(), "gibberish", 2), &MockRegistry::with_builtins()).unwrap();
        for r in &records {
            assert!(r.steps.iter().all(|s| s.fallback_used && s.replies.len() == 2));
            assert_eq!(r.steps.len(), 30);
        }
    }

    #[test]
    fn oracle_summary_is_shown_from_the_first_step() {
        let spec = RepresentationSpec::new(Granularity::Summary, Structure::DictList, Grounding::TextOnly)
            .with_flag(OracleFlag::OracleSummary);
        let records = run_experiment(&hanoi(spec, "optimal", 1), &MockRegistry::with_builtins()).unwrap();
        let first = records[0].steps[0].summary_text.as_deref().unwrap();
        assert!(first.starts_with("Peg A has disks 2, 1, and 0"));
        assert_eq!(records[0].steps.iter().map(|s| s.summary_input_tokens).sum::<u64>(), 0);
        assert_eq!(records[0].summary_violations, 0);
    }

    #[test]
    fn summariser_tokens_are_kept_apart() {
        let spec = RepresentationSpec::new(Granularity::Summary, Structure::Matrix, Grounding::TextOnly);
        let records = run_experiment(&hanoi(spec, "optimal", 1), &MockRegistry::with_builtins()).unwrap();
        let steps = &records[0].steps;
        assert_eq!(steps[0].summary_text.as_deref(), Some("Start of game"));
        assert_eq!(steps[0].summary_input_tokens, 0);
        assert!(steps[1..].iter().all(|s| s.summary_input_tokens > 0));
    }

    #[test]
    fn parallel_matches_serial() {
        let mut config = RunConfig::new(
            "messenger",
            RepresentationSpec::new(Granularity::LongForm, Structure::Coordinates, Grounding::TextOnly),
            ModelConfig::mock("random"),
        )
        .unwrap();
        config.episodes = 6;
        config.runs = 2;
        let serial = run_experiment(&config, &MockRegistry::with_builtins()).unwrap();
        config.parallelism = 4;
        let parallel = run_experiment(&config, &MockRegistry::with_builtins()).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial[6].seed, EpisodeSeed::new(1, 0));
    }

    #[test]
    fn oracle_summary_off_hanoi_is_rejected() {
        let spec = RepresentationSpec::new(Granularity::Summary, Structure::Symbolic, Grounding::TextOnly)
            .with_flag(OracleFlag::OracleSummary);
        let config = RunConfig::new("messenger", spec, ModelConfig::mock("optimal")).unwrap();
        assert!(matches!(config.validate(), Err(RunError::Config(_))));
    }
}
