//! Model-call gateway: an OpenAI-compatible remote backend and scripted
//! mocks, behind one in-flight cap.

pub mod mock;
pub mod remote;

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EpisodeSeed;
use crate::prompting::PromptBundle;
pub use mock::{MockPolicy, MockRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Remote,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub backend: Backend,
    /// Base URL; `/chat/completions` is appended.
    pub endpoint_url: String,
    /// Remote model name, or the registered mock policy name.
    pub model_name: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_output_tokens: u32,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_initial_ms: u64,
    pub backoff_max_ms: u64,
    /// Calls allowed in flight at once across all episodes.
    pub max_in_flight: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Mock,
            endpoint_url: String::new(),
            model_name: "optimal".into(),
            api_key: None,
            temperature: 0.2,
            top_p: 0.95,
            max_output_tokens: 512,
            timeout_secs: 120.0,
            max_retries: 3,
            backoff_initial_ms: 500,
            backoff_max_ms: 8_000,
            max_in_flight: 8,
        }
    }
}

impl ModelConfig {
    pub fn mock(policy: &str) -> Self {
        Self {
            backend: Backend::Mock,
            model_name: policy.into(),
            ..Self::default()
        }
    }

    pub fn remote(endpoint_url: &str, model_name: &str) -> Self {
        Self {
            backend: Backend::Remote,
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::Config(m.to_string()));
        if !(self.temperature >= 0.0) {
            return bad("temperature must be >= 0");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p must be in (0, 1]");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be positive");
        }
        if self.backend == Backend::Remote && self.endpoint_url.is_empty() {
            return bad("remote backend needs endpoint_url");
        }
        if !(self.timeout_secs > 0.0) {
            return bad("timeout_secs must be positive");
        }
        Ok(())
    }

    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_initial_ms.saturating_mul(factor).min(self.backoff_max_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReply {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// True when the counts are whitespace estimates, not endpoint usage.
    pub approximate_tokens: bool,
    #[serde(skip)]
    pub latency: Duration,
    pub attempt_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CallPurpose {
    Agent,
    Summary,
}

/// Who is calling; mocks use it to stay deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CallContext {
    pub seed: EpisodeSeed,
    pub timestep: u32,
    /// 0 for the first ask, 1 for the re-query after an unparseable reply.
    pub attempt: u32,
    pub purpose: CallPurpose,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("no mock policy named `{0}`")]
    UnknownPolicy(String),
}

impl GatewayError {
    /// Errors that end the episode as an incident rather than a score.
    pub fn is_incident(&self) -> bool {
        matches!(self, GatewayError::Transport { .. } | GatewayError::Protocol(_))
    }
}

/// Counting semaphore for the in-flight cap.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    freed: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot mutex");
        while *free == 0 {
            free = self.freed.wait(free).expect("slot mutex");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot mutex") += 1;
        self.0.freed.notify_one();
    }
}

/// Shared by every episode of a run.
pub struct Gateway {
    config: ModelConfig,
    mocks: MockRegistry,
    slots: Slots,
    remote: Option<remote::RemoteClient>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("config", &self.config).finish_non_exhaustive()
    }
}

pub fn whitespace_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

impl Gateway {
    pub fn new(config: ModelConfig, mocks: MockRegistry) -> Result<Self, GatewayError> {
        config.validate()?;
        if config.backend == Backend::Mock && mocks.get(&config.model_name).is_none() {
            return Err(GatewayError::UnknownPolicy(config.model_name.clone()));
        }
        let remote = (config.backend == Backend::Remote).then(|| remote::RemoteClient::new(&config));
        Ok(Self {
            slots: Slots::new(config.max_in_flight),
            config,
            mocks,
            remote,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn chat(&self, bundle: &PromptBundle, ctx: &CallContext) -> Result<ModelReply, GatewayError> {
        let _slot = self.slots.acquire();
        match self.config.backend {
            Backend::Mock => {
                let started = std::time::Instant::now();
                let policy: Arc<MockPolicy> = self
                    .mocks
                    .get(&self.config.model_name)
                    .ok_or_else(|| GatewayError::UnknownPolicy(self.config.model_name.clone()))?;
                let text = policy(bundle, ctx);
                Ok(ModelReply {
                    input_tokens: whitespace_tokens(&bundle.system_text) + whitespace_tokens(&bundle.user_text),
                    output_tokens: whitespace_tokens(&text),
                    approximate_tokens: true,
                    text,
                    latency: started.elapsed(),
                    attempt_count: 1,
                })
            }
            Backend::Remote => self
                .remote
                .as_ref()
                .expect("remote client built for remote backend")
                .chat(&self.config, bundle),
        }
    }
}
