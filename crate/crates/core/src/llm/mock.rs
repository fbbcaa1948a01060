//! Named scripted policies for the mock backend.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use rand::Rng;

use super::{CallContext, CallPurpose, GatewayError};
use crate::encoders::{decode_hanoi, Structure};
use crate::env::RngStream;
use crate::environments::hanoi::{optimal_move, HanoiState, ACTION_LABELS};
use crate::prompting::{PromptBundle, TemplateId};

/// Reply text as a pure function of the prompt and the call context.
pub type MockPolicy = dyn Fn(&PromptBundle, &CallContext) -> String + Send + Sync;

#[derive(Clone, Default)]
pub struct MockRegistry {
    policies: Arc<RwLock<BTreeMap<String, Arc<MockPolicy>>>>,
}

impl std::fmt::Debug for MockRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

/// Text between `Current observation: ` and the trajectory slot.
pub fn current_observation(prompt: &str) -> Option<&str> {
    let start = prompt.find("Current observation: ")? + "Current observation: ".len();
    let end = prompt[start..].find("\n\nPast trajectory: ")? + start;
    Some(&prompt[start..end])
}

/// Reads a Hanoi state from any of its four text formats.
pub fn read_hanoi(text: &str) -> Option<HanoiState> {
    [
        Structure::DictList,
        Structure::Matrix,
        Structure::TaggedList,
        Structure::NaturalLanguage,
    ]
    .into_iter()
    .find_map(|s| decode_hanoi(text, s).ok())
}

fn optimal(bundle: &PromptBundle, _ctx: &CallContext) -> String {
    if bundle.template_id == TemplateId::Summariser {
        return "Summary: Following the recursive plan, moving the smallest disk every other step.".into();
    }
    let state = current_observation(&bundle.user_text).and_then(read_hanoi);
    let index = state
        .as_ref()
        .and_then(optimal_move)
        .map_or(1, |mv| mv.action_index());
    if bundle.template_id == TemplateId::AgentVoT {
        let (map, summary) = match &state {
            Some(s) => (
                crate::encoders::vot::hanoi_vot_map(s),
                crate::memory::oracle_summary_hanoi(s),
            ),
            None => ("Map (Top-Down View):\n(unknown)".into(), "State unknown.".into()),
        };
        return format!(
            "{map}\nMap Update Notes:\n- no change\nReasoning: follow the recursive solution.\n\
             Action: {index} ({}). Reason: scripted.\nSummary: {summary}",
            ACTION_LABELS[index - 1]
        );
    }
    format!("Action: {index}. Reason: scripted.")
}

fn random(bundle: &PromptBundle, ctx: &CallContext) -> String {
    if ctx.purpose == CallPurpose::Summary {
        return "Summary: Moving at random.".into();
    }
    let counter = u64::from(ctx.timestep) * 4 + u64::from(ctx.attempt);
    let mut rng = ctx.seed.rng_at(RngStream::Mock, counter);
    let index = rng.random_range(1..=bundle.action_count.max(1));
    format!("Action: {index}. Reason: random.")
}

impl MockRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with `optimal`, `first`, `random`, `gibberish` and `echo`.
    pub fn with_builtins() -> Self {
        let r = Self::new();
        r.register("optimal", optimal).expect("fresh registry");
        r.register("random", random).expect("fresh registry");
        r.register("first", |b: &PromptBundle, _: &CallContext| {
            if b.template_id == TemplateId::Summariser {
                "Summary: Took the first action.".to_string()
            } else {
                "Action: 1. Reason: first listed.".to_string()
            }
        })
        .expect("fresh registry");
        r.register("gibberish", |_: &PromptBundle, _: &CallContext| {
            "I am not sure what to do here.".to_string()
        })
        .expect("fresh registry");
        r.register("echo", |b: &PromptBundle, _: &CallContext| b.user_text.clone())
            .expect("fresh registry");
        r
    }

    pub fn register<F>(&self, name: &str, policy: F) -> Result<(), GatewayError>
    where
        F: Fn(&PromptBundle, &CallContext) -> String + Send + Sync + 'static,
    {
        let mut map = self.policies.write().expect("registry lock");
        if map.contains_key(name) {
            return Err(GatewayError::Config(format!("mock policy `{name}` already registered")));
        }
        map.insert(name.to_string(), Arc::new(policy));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<Arc<MockPolicy>> {
        self.policies.read().expect("registry lock").get(name).cloned()
    }

    pub fn names(&self) -> Vec<String> {
        self.policies.read().expect("registry lock").keys().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EpisodeSeed;

    fn ctx(t: u32) -> CallContext {
        CallContext {
            seed: EpisodeSeed::new(1, 2),
            timestep: t,
            attempt: 0,
            purpose: CallPurpose::Agent,
        }
    }

    fn agent_bundle(obs: &str) -> PromptBundle {
        PromptBundle {
            system_text: String::new(),
            user_text: format!("Game Description: m\n\nCurrent observation: {obs}\n\nPast trajectory: (none)\n\nQuestion: q"),
            image: None,
            action_count: 6,
            template_id: TemplateId::Agent,
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        let r = MockRegistry::with_builtins();
        assert!(r.register("optimal", |_: &PromptBundle, _: &CallContext| String::new()).is_err());
        assert!(r.register("mine", |_: &PromptBundle, _: &CallContext| String::new()).is_ok());
    }

    #[test]
    fn optimal_reads_every_hanoi_format() {
        let r = MockRegistry::with_builtins();
        let p = r.get("optimal").unwrap();
        for obs in [
            "{'A': [2, 1, 0], 'B': [], 'C': []}",
            "[[2, 1, 0], [-1, -1, -1], [-1, -1, -1]]",
            "- A: |bottom, [2, 1, 0], top|\n- B: |bottom, [], top|\n- C: |bottom, [], top|",
            "Peg A has disk 2 at the bottom, disk 1 in the middle, and disk 0 on top. Peg B is empty. Peg C is empty.",
        ] {
            assert_eq!(p(&agent_bundle(obs), &ctx(1)), "Action: 2. Reason: scripted.");
        }
    }

    #[test]
    fn random_is_deterministic_per_context() {
        let r = MockRegistry::with_builtins();
        let p = r.get("random").unwrap();
        let b = agent_bundle("x");
        let replies: Vec<String> = (1..20).map(|t| p(&b, &ctx(t))).collect();
        assert_eq!(replies, (1..20).map(|t| p(&b, &ctx(t))).collect::<Vec<_>>());
        assert!(replies.iter().any(|r| r != &replies[0]));
    }
}
