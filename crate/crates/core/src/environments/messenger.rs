//! Messenger: fetch the message, deliver it to the goal, avoid the enemy.
//!
//! Entities are static. Observations name entities by their vocabulary word
//! while the manual refers to them through per-word aliases.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Compass, Pos};
use crate::env::{EpisodeSeed, RngStream, TerminationCause, Transition};

pub const ACTION_LABELS: [&str; 5] = ["Move North", "Move South", "Move East", "Move West", "Stay"];

pub const GRID_ROWS: i32 = 10;
pub const GRID_COLS: i32 = 10;
pub const MIN_SPAWN_SEPARATION: u32 = 2;

/// Observation word and the alias the manual uses for it.
pub const VOCABULARY: [(&str, &str); 12] = [
    ("airplane", "jet"),
    ("ball", "orb"),
    ("bird", "sparrow"),
    ("dog", "hound"),
    ("fish", "trout"),
    ("knight", "warrior"),
    ("mage", "wizard"),
    ("queen", "monarch"),
    ("robot", "automaton"),
    ("scientist", "researcher"),
    ("ship", "vessel"),
    ("sword", "blade"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Message,
    Goal,
    Enemy,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Message, Role::Goal, Role::Enemy];

    pub fn word(self) -> &'static str {
        match self {
            Role::Message => "message",
            Role::Goal => "goal",
            Role::Enemy => "enemy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub synonym: String,
    pub role: Role,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynonymEntry {
    pub name: String,
    pub synonym: String,
}

/// Role → entity word assignment for one episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynonymTable {
    pub message: SynonymEntry,
    pub goal: SynonymEntry,
    pub enemy: SynonymEntry,
}

impl SynonymTable {
    pub fn get(&self, role: Role) -> &SynonymEntry {
        match role {
            Role::Message => &self.message,
            Role::Goal => &self.goal,
            Role::Enemy => &self.enemy,
        }
    }

    fn draw(rng: &mut impl Rng) -> SynonymTable {
        let mut words: Vec<_> = VOCABULARY.to_vec();
        words.shuffle(rng);
        let entry = |(name, synonym): (&str, &str)| SynonymEntry {
            name: name.to_string(),
            synonym: synonym.to_string(),
        };
        SynonymTable {
            message: entry(words[0]),
            goal: entry(words[1]),
            enemy: entry(words[2]),
        }
    }
}

/// Deterministic role → word assignment for `seed`; distinct roles never
/// share a word.
pub fn synonym_table(seed: EpisodeSeed) -> SynonymTable {
    SynonymTable::draw(&mut seed.rng(RngStream::Synonyms))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessengerState {
    pub rows: i32,
    pub cols: i32,
    pub agent: Pos,
    pub entities: Vec<Entity>,
    pub has_message: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityView {
    pub name: String,
    pub synonym: String,
    pub role: Role,
    pub pos: Pos,
    /// (rows south, cols east) from the agent.
    pub offset: (i32, i32),
    pub distance: u32,
}

impl EntityView {
    pub fn direction(&self) -> Option<Compass> {
        Compass::from_offset(self.offset.0, self.offset.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessengerObservation {
    pub rows: i32,
    pub cols: i32,
    pub agent: Pos,
    pub has_message: bool,
    pub last_action: Option<String>,
    /// Entities still on the board, in role order.
    pub entities: Vec<EntityView>,
}

impl MessengerObservation {
    pub fn without_last_action(&self) -> Self {
        Self {
            last_action: None,
            ..self.clone()
        }
    }
}

impl MessengerState {
    pub(crate) fn spawn(rng: &mut impl Rng, synonym_rng: &mut impl Rng) -> Self {
        let table = SynonymTable::draw(synonym_rng);
        let positions = loop {
            let candidate: Vec<Pos> = (0..4)
                .map(|_| Pos::new(rng.random_range(0..GRID_ROWS), rng.random_range(0..GRID_COLS)))
                .collect();
            let separated = candidate.iter().enumerate().all(|(i, p)| {
                candidate[..i]
                    .iter()
                    .all(|q| p.manhattan(*q) >= MIN_SPAWN_SEPARATION)
            });
            if separated {
                break candidate;
            }
        };
        let entities = Role::ALL
            .iter()
            .zip(&positions[1..])
            .map(|(&role, &pos)| {
                let entry = table.get(role);
                Entity {
                    name: entry.name.clone(),
                    synonym: entry.synonym.clone(),
                    role,
                    pos,
                }
            })
            .collect();
        MessengerState {
            rows: GRID_ROWS,
            cols: GRID_COLS,
            agent: positions[0],
            entities,
            has_message: false,
        }
    }

    pub fn entity(&self, role: Role) -> Option<&Entity> {
        self.entities.iter().find(|e| e.role == role)
    }

    pub fn synonyms(&self) -> SynonymTable {
        let entry = |role| {
            let e = self.entity(role).expect("one entity per role");
            SynonymEntry {
                name: e.name.clone(),
                synonym: e.synonym.clone(),
            }
        };
        SynonymTable {
            message: entry(Role::Message),
            goal: entry(Role::Goal),
            enemy: entry(Role::Enemy),
        }
    }

    /// Entities still on the board; the message disappears once collected.
    pub fn visible_entities(&self) -> impl Iterator<Item = &Entity> {
        let collected = self.has_message;
        self.entities
            .iter()
            .filter(move |e| !(collected && e.role == Role::Message))
    }

    pub fn observe(&self, last_action: Option<String>) -> MessengerObservation {
        let entities = self
            .visible_entities()
            .map(|e| {
                let offset = (e.pos.row - self.agent.row, e.pos.col - self.agent.col);
                EntityView {
                    name: e.name.clone(),
                    synonym: e.synonym.clone(),
                    role: e.role,
                    pos: e.pos,
                    offset,
                    distance: self.agent.manhattan(e.pos),
                }
            })
            .collect();
        MessengerObservation {
            rows: self.rows,
            cols: self.cols,
            agent: self.agent,
            has_message: self.has_message,
            last_action,
            entities,
        }
    }

    pub(crate) fn step_action(&mut self, action_index: usize) -> Transition {
        let (dr, dc) = match action_index {
            1 => (-1, 0),
            2 => (1, 0),
            3 => (0, 1),
            4 => (0, -1),
            _ => (0, 0),
        };
        self.agent = Pos::new(
            (self.agent.row + dr).clamp(0, self.rows - 1),
            (self.agent.col + dc).clamp(0, self.cols - 1),
        );
        let here = self
            .visible_entities()
            .find(|e| e.pos == self.agent)
            .map(|e| e.role);
        match here {
            Some(Role::Message) => {
                self.has_message = true;
                Transition {
                    reward: 0.5,
                    cause: TerminationCause::None,
                }
            }
            Some(Role::Goal) if self.has_message => Transition {
                reward: 0.5,
                cause: TerminationCause::GoalReached,
            },
            Some(Role::Goal) | Some(Role::Enemy) => Transition {
                reward: -1.0,
                cause: TerminationCause::Failure,
            },
            None => Transition {
                reward: 0.0,
                cause: TerminationCause::None,
            },
        }
    }
}
