//! Fixtures shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use std::path::PathBuf;

use statebench::encoders::{encode, Granularity, Grounding, RepresentationSpec, Structure};
use statebench::env::{EnvSpec, EpisodeSeed, FamilyState};
use statebench::environments::messenger::{Entity, Role};
use statebench::environments::{HanoiState, MessengerState, Observation, Pos};
use statebench::memory::{TrajectoryMemory, TrajectoryRecord, START_OF_GAME};
use statebench::prompting::{self, PromptBundle};

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Contents of a golden file. With `STATEBENCH_BLESS=1` the file is
/// rewritten from `actual` first.
pub fn golden(name: &str, actual: &str) -> String {
    let path = golden_path(name);
    if std::env::var("STATEBENCH_BLESS").as_deref() == Ok("1") {
        std::fs::write(&path, actual).unwrap();
    }
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn messenger_state(rows: i32, cols: i32, agent: Pos, has_message: bool, ents: &[(&str, &str, Role, Pos)]) -> MessengerState {
    MessengerState {
        rows,
        cols,
        agent,
        entities: ents
            .iter()
            .map(|&(name, synonym, role, pos)| Entity {
                name: name.into(),
                synonym: synonym.into(),
                role,
                pos,
            })
            .collect(),
        has_message,
    }
}

/// Agent (5,5) without the message; airplane (5,3), ball (7,5), queen (3,5).
pub fn coordinates_scenario() -> MessengerState {
    messenger_state(
        10,
        10,
        Pos::new(5, 5),
        false,
        &[
            ("airplane", "plane", Role::Message, Pos::new(5, 3)),
            ("ball", "orb", Role::Goal, Pos::new(7, 5)),
            ("queen", "monarch", Role::Enemy, Pos::new(3, 5)),
        ],
    )
}

/// 4×4 layout with the agent at row 3 and a robot, ball and mage on row 4.
pub fn example_layout() -> MessengerState {
    messenger_state(
        4,
        4,
        Pos::new(2, 2),
        false,
        &[
            ("robot", "secret document", Role::Message, Pos::new(3, 0)),
            ("ball", "orb", Role::Goal, Pos::new(3, 2)),
            ("mage", "\"wizard\"", Role::Enemy, Pos::new(3, 3)),
        ],
    )
}

pub fn hanoi_spec() -> EnvSpec {
    EnvSpec::named("hanoi").unwrap()
}

/// Agent prompt at the Hanoi reset state, TaggedList, empty history.
pub fn canonical_agent_prompt() -> PromptBundle {
    let spec = hanoi_spec();
    let state = HanoiState::initial(3);
    let rep = RepresentationSpec::new(Granularity::LongForm, Structure::TaggedList, Grounding::TextOnly);
    let encoded = encode(&Observation::Hanoi(state.clone()), &rep).unwrap();
    let manual = prompting::manual(&spec, &FamilyState::Hanoi(state));
    prompting::build_prompt(&rep, &manual, &encoded, &TrajectoryMemory::new(), 30, &spec.action_labels, None).unwrap()
}

/// Summariser prompt after one Hanoi move.
pub fn canonical_summary_prompt() -> String {
    let spec = hanoi_spec();
    let state = HanoiState::initial(3);
    let manual = prompting::manual(&spec, &FamilyState::Hanoi(state));
    let mut memory = TrajectoryMemory::new();
    memory
        .push(TrajectoryRecord {
            timestep: 1,
            action_label: spec.action_labels[1].clone(),
            reward: 0.0,
            observation_text: "- A: |bottom, [2, 1], top|\n- B: |bottom, [], top|\n- C: |bottom, [0], top|".into(),
        })
        .unwrap();
    prompting::summary_prompt(&manual, &memory.long_form_body(30), START_OF_GAME)
}

/// VoT prompt on the coordinates scenario, NaturalLanguage, Summary.
pub fn canonical_vot_prompt() -> PromptBundle {
    let spec = EnvSpec::named("messenger").unwrap();
    let state = coordinates_scenario();
    let rep = RepresentationSpec::new(Granularity::Summary, Structure::NaturalLanguage, Grounding::TextPlusVoT);
    let encoded = encode(&Observation::Messenger(state.observe(None)), &rep).unwrap();
    let manual = prompting::manual(&spec, &FamilyState::Messenger(state));
    prompting::build_prompt(&rep, &manual, &encoded, &TrajectoryMemory::new(), 10, &spec.action_labels, None).unwrap()
}

pub fn seed(i: u64) -> EpisodeSeed {
    EpisodeSeed::new(0xC0FFEE, i)
}
