//! Messenger text formats.

use super::Structure;
use crate::environments::messenger::{EntityView, MessengerObservation, Role};

fn steps(n: u32) -> String {
    if n == 1 {
        "1 step".to_string()
    } else {
        format!("{n} steps")
    }
}

fn possession(obs: &MessengerObservation) -> &'static str {
    if obs.has_message {
        "You (agent) already have the message."
    } else {
        "You (agent) don't have the message."
    }
}

fn relative_phrase(e: &EntityView) -> String {
    match e.direction() {
        Some(dir) => format!("{} {} to your {}", e.name, steps(e.distance), dir.word()),
        None => format!("{} at your position", e.name),
    }
}

fn see_block(lines: Vec<String>) -> String {
    let mut out = String::from("You see:");
    for line in lines {
        out.push_str("\n- ");
        out.push_str(&line);
    }
    out
}

fn natural_language(obs: &MessengerObservation) -> String {
    let mut parts = Vec::new();
    if let Some(action) = &obs.last_action {
        parts.push(format!("You took action {action}."));
    }
    parts.push(possession(obs).to_string());
    parts.push(see_block(
        obs.entities
            .iter()
            .map(|e| format!("{} {} away", e.name, steps(e.distance)))
            .collect(),
    ));
    parts.join("\n")
}

fn natural_language_pos(obs: &MessengerObservation) -> String {
    let holding = if obs.has_message { "with" } else { "without" };
    // The sentence form always says "steps", even for one.
    let seen: Vec<String> = obs
        .entities
        .iter()
        .map(|e| match e.direction() {
            Some(dir) => format!("a {} {} steps to the {}", e.name, e.distance, dir.word()),
            None => format!("a {} at your position", e.name),
        })
        .collect();
    let seen = if seen.is_empty() {
        "nothing".to_string()
    } else {
        seen.join(", ")
    };
    format!(
        "You are an agent {holding} the message. You are currently in position {}, {}. \
         You can see {seen}.",
        obs.agent.row, obs.agent.col
    )
}

fn coordinates(obs: &MessengerObservation) -> String {
    let mut out = format!("COORDINATE SYSTEM:\nAgent: {}\nEntities:", obs.agent);
    let mut seen: Vec<&str> = Vec::new();
    for e in &obs.entities {
        let index = seen.iter().filter(|n| **n == e.name).count();
        seen.push(&e.name);
        out.push_str(&format!("\n    {}_{index}: {}", e.name, e.pos));
    }
    out.push_str("\n\nOriginal View:\n");
    out.push_str(possession(obs));
    out.push('\n');
    out.push_str(&see_block(obs.entities.iter().map(relative_phrase).collect()));
    out
}

pub(crate) fn role_glyph(role: Role) -> char {
    match role {
        Role::Enemy => 'E',
        Role::Message => 'M',
        Role::Goal => 'G',
    }
}

fn symbolic(obs: &MessengerObservation) -> String {
    let mut grid = vec![vec!['.'; obs.cols as usize]; obs.rows as usize];
    for e in &obs.entities {
        grid[e.pos.row as usize][e.pos.col as usize] = role_glyph(e.role);
    }
    grid[obs.agent.row as usize][obs.agent.col as usize] =
        if obs.has_message { 'P' } else { 'A' };
    let mut lines: Vec<String> = grid.into_iter().map(|r| r.into_iter().collect()).collect();
    lines.push("Legend:".into());
    lines.push("A=agent(no msg)".into());
    lines.push("P=agent(with msg)".into());
    lines.push(".=empty".into());
    lines.push("Entities:".into());
    for role in [Role::Enemy, Role::Message, Role::Goal] {
        if let Some(e) = obs.entities.iter().find(|e| e.role == role) {
            lines.push(format!("  {}={}", role_glyph(role), e.name));
        }
    }
    lines.join("\n")
}

/// Renders a Messenger observation in one of its four formats.
///
/// Panics if `structure` is not a Messenger format.
pub fn encode_messenger(obs: &MessengerObservation, structure: Structure) -> String {
    match structure {
        Structure::NaturalLanguage => natural_language(obs),
        Structure::NaturalLanguagePos => natural_language_pos(obs),
        Structure::Coordinates => coordinates(obs),
        Structure::Symbolic => symbolic(obs),
        other => panic!("{other:?} is not a Messenger format"),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::environments::messenger::{Entity, MessengerState};
    use crate::environments::Pos;

    pub(crate) fn state(agent: Pos, has_message: bool, ents: &[(&str, Role, Pos)]) -> MessengerState {
        MessengerState {
            rows: 10,
            cols: 10,
            agent,
            entities: ents
                .iter()
                .map(|&(name, role, pos)| Entity {
                    name: name.into(),
                    synonym: format!("{name}-alias"),
                    role,
                    pos,
                })
                .collect(),
            has_message,
        }
    }

    fn coordinates_scenario() -> MessengerObservation {
        state(
            Pos::new(5, 5),
            false,
            &[
                ("airplane", Role::Message, Pos::new(5, 3)),
                ("ball", Role::Goal, Pos::new(7, 5)),
                ("queen", Role::Enemy, Pos::new(3, 5)),
            ],
        )
        .observe(None)
    }

    #[test]
    fn coordinates_block() {
        assert_eq!(
            encode_messenger(&coordinates_scenario(), Structure::Coordinates),
            "COORDINATE SYSTEM:\nAgent: (5, 5)\nEntities:\n    airplane_0: (5, 3)\n    \
             ball_0: (7, 5)\n    queen_0: (3, 5)\n\nOriginal View:\n\
             You (agent) don't have the message.\nYou see:\n\
             - airplane 2 steps to your west\n- ball 2 steps to your south\n\
             - queen 2 steps to your north"
        );
    }

    #[test]
    fn natural_language_with_action() {
        let obs = state(
            Pos::new(0, 0),
            true,
            &[
                ("bird", Role::Message, Pos::new(4, 5)),
                ("ship", Role::Goal, Pos::new(5, 4)),
                ("sword", Role::Enemy, Pos::new(1, 0)),
            ],
        )
        .observe(Some("Move North".into()));
        // The collected message is no longer on the board.
        assert_eq!(
            encode_messenger(&obs, Structure::NaturalLanguage),
            "You took action Move North.\nYou (agent) already have the message.\n\
             You see:\n- ship 9 steps away\n- sword 1 step away"
        );
    }

    #[test]
    fn natural_language_pos_sentence() {
        let obs = state(
            Pos::new(5, 6),
            true,
            &[
                ("mage", Role::Enemy, Pos::new(5, 3)),
                ("dog", Role::Goal, Pos::new(5, 7)),
            ],
        )
        .observe(None);
        assert_eq!(
            encode_messenger(&obs, Structure::NaturalLanguagePos),
            "You are an agent with the message. You are currently in position 5, 6. \
             You can see a mage 3 steps to the west, a dog 1 steps to the east."
        );
    }

    #[test]
    fn empty_view() {
        let obs = state(Pos::new(1, 1), false, &[]).observe(None);
        assert_eq!(
            encode_messenger(&obs, Structure::NaturalLanguage),
            "You (agent) don't have the message.\nYou see:"
        );
        assert!(encode_messenger(&obs, Structure::NaturalLanguagePos).ends_with("You can see nothing."));
    }

    #[test]
    fn symbolic_grid() {
        let obs = state(
            Pos::new(5, 5),
            false,
            &[
                ("scientist", Role::Message, Pos::new(5, 7)),
                ("robot", Role::Goal, Pos::new(5, 3)),
                ("fish", Role::Enemy, Pos::new(7, 5)),
            ],
        )
        .observe(None);
        let text = encode_messenger(&obs, Structure::Symbolic);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[5], "...G.A.M..");
        assert_eq!(lines[7], ".....E....");
        assert_eq!(
            lines[10..].join("\n"),
            "Legend:\nA=agent(no msg)\nP=agent(with msg)\n.=empty\nEntities:\n  E=fish\n  M=scientist\n  G=robot"
        );
    }

    #[test]
    fn symbolic_agent_with_message() {
        let obs = state(Pos::new(5, 5), true, &[("robot", Role::Goal, Pos::new(0, 0))]).observe(None);
        let text = encode_messenger(&obs, Structure::Symbolic);
        assert_eq!(text.lines().nth(5).unwrap(), ".....P....");
        assert_eq!(text.lines().take(10).filter(|l| l.len() == 10).count(), 10);
    }
}
