//! OpenAI-compatible `POST {endpoint}/chat/completions` over blocking HTTP.

use std::time::{Duration, Instant};

use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{whitespace_tokens, GatewayError, ModelConfig, ModelReply};
use crate::prompting::PromptBundle;

pub struct RemoteClient {
    agent: ureq::Agent,
    url: String,
}

#[derive(Debug, Deserialize)]
struct Usage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Debug, Deserialize)]
struct Completion {
    choices: Vec<Choice>,
    usage: Option<Usage>,
}

/// Request body for one bundle.
pub fn request_body(config: &ModelConfig, bundle: &PromptBundle) -> Value {
    let mut messages = Vec::new();
    if !bundle.system_text.is_empty() {
        messages.push(json!({"role": "system", "content": bundle.system_text}));
    }
    let content = match &bundle.image {
        None => json!(bundle.user_text),
        Some(png) => {
            let data = base64::engine::general_purpose::STANDARD.encode(png);
            json!([
                {"type": "text", "text": bundle.user_text},
                {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{data}")}}
            ])
        }
    };
    messages.push(json!({"role": "user", "content": content}));
    json!({
        "model": config.model_name,
        "messages": messages,
        "temperature": config.temperature,
        "top_p": config.top_p,
        "max_tokens": config.max_output_tokens,
    })
}

/// Parses a completion body; missing usage falls back to whitespace counts.
pub fn parse_completion(body: &str, bundle: &PromptBundle) -> Result<(String, u64, u64, bool), GatewayError> {
    let parsed: Completion =
        serde_json::from_str(body).map_err(|e| GatewayError::Protocol(format!("bad completion body: {e}")))?;
    let text = parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| GatewayError::Protocol("completion has no message content".into()))?;
    let usage = parsed
        .usage
        .and_then(|u| Some((u.prompt_tokens?, u.completion_tokens?)));
    Ok(match usage {
        Some((input, output)) => (text, input, output, false),
        None => {
            let input = whitespace_tokens(&bundle.system_text) + whitespace_tokens(&bundle.user_text);
            let output = whitespace_tokens(&text);
            (text, input, output, true)
        }
    })
}

enum Attempt {
    Done(Result<(String, u64, u64, bool), GatewayError>),
    Retry(String),
}

impl RemoteClient {
    pub fn new(config: &ModelConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}/chat/completions", config.endpoint_url.trim_end_matches('/'));
        Self { agent, url }
    }

    fn attempt(&self, config: &ModelConfig, body: &Value, bundle: &PromptBundle) -> Attempt {
        let mut request = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &config.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match request.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        match status {
            200..=299 => Attempt::Done(parse_completion(&text, bundle)),
            429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Done(Err(GatewayError::Protocol(format!("HTTP {status}: {text}")))),
        }
    }

    pub fn chat(&self, config: &ModelConfig, bundle: &PromptBundle) -> Result<ModelReply, GatewayError> {
        let body = request_body(config, bundle);
        let started = Instant::now();
        let mut last = String::new();
        for attempt in 1..=config.max_retries + 1 {
            if attempt > 1 {
                std::thread::sleep(config.backoff(attempt - 1));
            }
            match self.attempt(config, &body, bundle) {
                Attempt::Done(result) => {
                    let (text, input_tokens, output_tokens, approximate_tokens) = result?;
                    return Ok(ModelReply {
                        text,
                        input_tokens,
                        output_tokens,
                        approximate_tokens,
                        latency: started.elapsed(),
                        attempt_count: attempt,
                    });
                }
                Attempt::Retry(reason) => {
                    tracing::warn!(attempt, %reason, "transient model-call failure");
                    last = reason;
                }
            }
        }
        Err(GatewayError::Transport {
            attempts: config.max_retries + 1,
            message: last,
        })
    }
}
