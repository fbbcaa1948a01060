//! Episode contract shared by every environment family.
//!
//! An [`Env`] owns the ground-truth state of one episode. It starts at
//! timestep 1, accepts 1-based action indices, and refuses further steps
//! once a terminal outcome has been produced.

mod seed;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use seed::{EpisodeSeed, RngStream};

use crate::environments::grid::{GridWorldState, MissionTask};
use crate::environments::hanoi::{self, HanoiState};
use crate::environments::messenger::{self, MessengerState};
use crate::environments::{grid, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

/// Which dynamics an [`EnvSpec`] selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Hanoi,
    Messenger,
    Grid(MissionTask),
}

impl Family {
    pub fn is_grid(self) -> bool {
        matches!(self, Family::Grid(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub family: Family,
    pub action_labels: Vec<String>,
    pub max_timesteps: u32,
    /// Steps of past trajectory kept in the prompt.
    pub history_window: u32,
    pub difficulty: Difficulty,
    /// Episodes per run when a config does not say otherwise.
    pub default_episodes: u32,
}

impl EnvSpec {
    pub fn action_count(&self) -> usize {
        self.action_labels.len()
    }

    /// Checks the structural invariants: non-empty, duplicate-free action
    /// labels and positive horizons.
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.action_labels.is_empty() {
            return Err(EnvError::InvalidSpec(format!(
                "{}: action_labels is empty",
                self.name
            )));
        }
        for (i, label) in self.action_labels.iter().enumerate() {
            if self.action_labels[..i].contains(label) {
                return Err(EnvError::InvalidSpec(format!(
                    "{}: duplicate action label `{label}`",
                    self.name
                )));
            }
        }
        if self.max_timesteps == 0 || self.history_window == 0 {
            return Err(EnvError::InvalidSpec(format!(
                "{}: max_timesteps and history_window must be positive",
                self.name
            )));
        }
        Ok(())
    }

    /// Looks up one of the shipped environments by name.
    pub fn named(name: &str) -> Result<EnvSpec, EnvError> {
        registry()
            .into_iter()
            .find(|spec| spec.name == name)
            .ok_or_else(|| EnvError::UnknownEnvironment(name.to_string()))
    }
}

fn labels(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// The seven shipped environments.
pub fn registry() -> Vec<EnvSpec> {
    let babyai = |name: &str, task: MissionTask, difficulty: Difficulty| EnvSpec {
        name: name.to_string(),
        family: Family::Grid(task),
        action_labels: labels(&grid::ACTION_LABELS),
        max_timesteps: 128,
        history_window: 128,
        difficulty,
        default_episodes: 10,
    };
    vec![
        EnvSpec {
            name: "hanoi".to_string(),
            family: Family::Hanoi,
            action_labels: labels(&hanoi::ACTION_LABELS),
            max_timesteps: 30,
            history_window: 30,
            difficulty: Difficulty::Medium,
            default_episodes: 10,
        },
        EnvSpec {
            name: "messenger".to_string(),
            family: Family::Messenger,
            action_labels: labels(&messenger::ACTION_LABELS),
            max_timesteps: 10,
            history_window: 10,
            difficulty: Difficulty::Hard,
            default_episodes: 20,
        },
        babyai("babyai-goto", MissionTask::GoTo, Difficulty::Easy),
        babyai("babyai-open", MissionTask::Open, Difficulty::Medium),
        babyai("babyai-pickup", MissionTask::Pickup, Difficulty::Medium),
        babyai(
            "babyai-pickupseqgoto",
            MissionTask::PickUpSeqGoTo,
            Difficulty::Hard,
        ),
        babyai("babyai-putnext", MissionTask::PutNext, Difficulty::Hard),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationCause {
    GoalReached,
    Failure,
    Timeout,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: bool,
    pub termination_cause: TerminationCause,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("action index {index} is outside 1..={count}")]
    ActionOutOfRange { index: usize, count: usize },
    #[error("episode already terminated ({0:?})")]
    AlreadyTerminal(TerminationCause),
    #[error("episode has not terminated yet")]
    NotTerminal,
}

/// Ground-truth state of whichever family is running.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyState {
    Hanoi(HanoiState),
    Messenger(MessengerState),
    Grid(GridWorldState),
}

/// Result of a family-level transition, before episode bookkeeping.
pub(crate) struct Transition {
    pub reward: f64,
    pub cause: TerminationCause,
}

#[derive(Debug, Clone)]
pub struct Env {
    spec: EnvSpec,
    seed: EpisodeSeed,
    state: FamilyState,
    timestep: u32,
    cumulative_reward: f64,
    termination: TerminationCause,
    last_action: Option<usize>,
}

impl Env {
    /// Resets the environment called `name`.
    pub fn reset_named(name: &str, seed: EpisodeSeed) -> Result<Env, EnvError> {
        Env::reset(&EnvSpec::named(name)?, seed)
    }

    pub fn reset(spec: &EnvSpec, seed: EpisodeSeed) -> Result<Env, EnvError> {
        spec.validate()?;
        let mut rng = seed.rng(RngStream::Environment);
        let state = match spec.family {
            Family::Hanoi => FamilyState::Hanoi(HanoiState::initial(3)),
            Family::Messenger => {
                let mut synonym_rng = seed.rng(RngStream::Synonyms);
                FamilyState::Messenger(MessengerState::spawn(&mut rng, &mut synonym_rng))
            }
            Family::Grid(task) => FamilyState::Grid(GridWorldState::generate(task, &mut rng)),
        };
        Ok(Env {
            spec: spec.clone(),
            seed,
            state,
            timestep: 1,
            cumulative_reward: 0.0,
            termination: TerminationCause::None,
            last_action: None,
        })
    }

    /// Wraps an explicit state, for scenario tests and oracle checks.
    pub fn from_state(spec: &EnvSpec, seed: EpisodeSeed, state: FamilyState) -> Env {
        Env {
            spec: spec.clone(),
            seed,
            state,
            timestep: 1,
            cumulative_reward: 0.0,
            termination: TerminationCause::None,
            last_action: None,
        }
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn seed(&self) -> EpisodeSeed {
        self.seed
    }

    pub fn state(&self) -> &FamilyState {
        &self.state
    }

    pub fn timestep(&self) -> u32 {
        self.timestep
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.cumulative_reward
    }

    pub fn termination(&self) -> TerminationCause {
        self.termination
    }

    pub fn is_terminal(&self) -> bool {
        self.termination != TerminationCause::None
    }

    pub fn last_action_label(&self) -> Option<&str> {
        self.last_action
            .map(|i| self.spec.action_labels[i - 1].as_str())
    }

    /// Observation payload of the current state.
    pub fn observe(&self) -> Observation {
        let last = self.last_action_label().map(str::to_string);
        match &self.state {
            FamilyState::Hanoi(s) => Observation::Hanoi(s.clone()),
            FamilyState::Messenger(s) => Observation::Messenger(s.observe(last)),
            FamilyState::Grid(s) => Observation::Grid(s.observe()),
        }
    }

    /// Applies the 1-based `action_index`.
    pub fn step(&mut self, action_index: usize) -> Result<StepOutcome, EnvError> {
        if self.is_terminal() {
            return Err(EnvError::AlreadyTerminal(self.termination));
        }
        let count = self.spec.action_count();
        if action_index == 0 || action_index > count {
            return Err(EnvError::ActionOutOfRange {
                index: action_index,
                count,
            });
        }
        let transition = match &mut self.state {
            FamilyState::Hanoi(s) => s.step_action(action_index),
            FamilyState::Messenger(s) => s.step_action(action_index),
            FamilyState::Grid(s) => s.step_action(action_index),
        };
        self.last_action = Some(action_index);
        self.cumulative_reward += transition.reward;
        self.timestep += 1;
        self.termination = transition.cause;
        if self.termination == TerminationCause::None && self.timestep > self.spec.max_timesteps {
            self.termination = TerminationCause::Timeout;
        }
        Ok(StepOutcome {
            observation: self.observe(),
            reward: transition.reward,
            terminal: self.is_terminal(),
            termination_cause: self.termination,
        })
    }

    /// Episode score in `[0, 1]`; exactly 1.0 iff the task was completed.
    ///
    /// Hanoi earns a third per disk stacked on the goal peg counting up from
    /// the largest disk, Messenger earns 0.5 for holding the message and 1.0
    /// for delivering it (0.0 on any failure), grid missions are binary.
    pub fn normalized_score(&self) -> Result<f64, EnvError> {
        if !self.is_terminal() {
            return Err(EnvError::NotTerminal);
        }
        Ok(match &self.state {
            FamilyState::Hanoi(s) => s.progress(),
            FamilyState::Messenger(s) => match self.termination {
                TerminationCause::GoalReached => 1.0,
                TerminationCause::Failure => 0.0,
                _ if s.has_message => 0.5,
                _ => 0.0,
            },
            FamilyState::Grid(_) => {
                if self.termination == TerminationCause::GoalReached {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_specs_are_valid_and_unique() {
        let specs = registry();
        assert_eq!(specs.len(), 7);
        for (i, spec) in specs.iter().enumerate() {
            spec.validate().unwrap();
            assert!(specs[..i].iter().all(|s| s.name != spec.name));
        }
    }

    #[test]
    fn unknown_name_is_a_configuration_error() {
        let err = Env::reset_named("nosuchenv", EpisodeSeed::new(0, 0)).unwrap_err();
        assert_eq!(err, EnvError::UnknownEnvironment("nosuchenv".into()));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut spec = EnvSpec::named("hanoi").unwrap();
        spec.action_labels[1] = spec.action_labels[0].clone();
        assert!(matches!(spec.validate(), Err(EnvError::InvalidSpec(_))));
    }

    #[test]
    fn action_index_zero_and_overflow_rejected() {
        let mut env = Env::reset_named("hanoi", EpisodeSeed::new(1, 0)).unwrap();
        assert_eq!(
            env.step(0).unwrap_err(),
            EnvError::ActionOutOfRange { index: 0, count: 6 }
        );
        assert_eq!(
            env.step(7).unwrap_err(),
            EnvError::ActionOutOfRange { index: 7, count: 6 }
        );
        assert_eq!(env.timestep(), 1);
    }

    #[test]
    fn timeout_after_max_timesteps_and_no_step_past_terminal() {
        let mut env = Env::reset_named("messenger", EpisodeSeed::new(9, 2)).unwrap();
        assert!(env.normalized_score().is_err());
        let mut steps = 0;
        while !env.is_terminal() {
            // Stay never terminates by itself.
            let out = env.step(5).unwrap();
            steps += 1;
            assert_eq!(out.terminal, out.termination_cause != TerminationCause::None);
        }
        assert_eq!(steps, 10);
        assert_eq!(env.termination(), TerminationCause::Timeout);
        assert_eq!(env.timestep(), 11);
        assert!(matches!(env.step(5), Err(EnvError::AlreadyTerminal(_))));
        assert_eq!(env.normalized_score().unwrap(), 0.0);
    }
}
