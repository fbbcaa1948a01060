mod common;

use statebench::encoders::{encode_hanoi, encode_messenger, oracle_vot_map, Structure};
use statebench::env::FamilyState;
use statebench::environments::HanoiState;

use common::*;

#[test]
fn hanoi_reset_encodings() {
    let s = HanoiState::initial(3);
    for (structure, file) in [
        (Structure::NaturalLanguage, "hanoi_natural_language.txt"),
        (Structure::DictList, "hanoi_dict_list.txt"),
        (Structure::Matrix, "hanoi_matrix.txt"),
        (Structure::TaggedList, "hanoi_tagged_list.txt"),
    ] {
        let got = encode_hanoi(&s, structure);
        assert_eq!(got, golden(file, &got), "{structure}");
    }
}

#[test]
fn messenger_coordinates_scenario() {
    let got = encode_messenger(&coordinates_scenario().observe(None), Structure::Coordinates);
    assert_eq!(got, golden("messenger_coordinates.txt", &got));
}

#[test]
fn vot_example_layout() {
    let got = oracle_vot_map(&FamilyState::Messenger(example_layout()));
    assert_eq!(got, golden("vot_example_layout.txt", &got));
}

#[test]
fn agent_prompt() {
    let got = canonical_agent_prompt().user_text;
    assert_eq!(got, golden("prompt_agent.txt", &got));
    assert!(got.contains("Action: [action number]. Reason: [explanation]"));
}

#[test]
fn summarizer_prompt() {
    let got = canonical_summary_prompt();
    assert_eq!(got, golden("prompt_summarizer.txt", &got));
}

#[test]
fn vot_prompt() {
    let got = canonical_vot_prompt().user_text;
    assert_eq!(got, golden("prompt_vot.txt", &got));
    assert!(got.contains("Draw a compact top-down ASCII map"));
}
