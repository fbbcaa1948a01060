//! The three environment families and their observation payloads.

pub mod grid;
pub mod hanoi;
pub mod messenger;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use grid::{GridObservation, GridWorldState};
pub use hanoi::HanoiState;
pub use messenger::{MessengerObservation, MessengerState};

/// Grid coordinate: `row` grows southward, `col` grows eastward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub row: i32,
    pub col: i32,
}

impl Pos {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn offset(self, drow: i32, dcol: i32) -> Pos {
        Pos::new(self.row + drow, self.col + dcol)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compass {
    North,
    NorthEast,
    East,
    SouthEast,
    South,
    SouthWest,
    West,
    NorthWest,
}

impl Compass {
    /// Direction of a (row, col) offset; `None` for a zero offset.
    pub fn from_offset(drow: i32, dcol: i32) -> Option<Compass> {
        use std::cmp::Ordering::*;
        Some(match (drow.cmp(&0), dcol.cmp(&0)) {
            (Equal, Equal) => return None,
            (Less, Equal) => Compass::North,
            (Greater, Equal) => Compass::South,
            (Equal, Greater) => Compass::East,
            (Equal, Less) => Compass::West,
            (Less, Greater) => Compass::NorthEast,
            (Less, Less) => Compass::NorthWest,
            (Greater, Greater) => Compass::SouthEast,
            (Greater, Less) => Compass::SouthWest,
        })
    }

    pub fn word(self) -> &'static str {
        match self {
            Compass::North => "north",
            Compass::NorthEast => "northeast",
            Compass::East => "east",
            Compass::SouthEast => "southeast",
            Compass::South => "south",
            Compass::SouthWest => "southwest",
            Compass::West => "west",
            Compass::NorthWest => "northwest",
        }
    }
}

/// What the agent is shown at one timestep, before encoding.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    /// Hanoi is fully observed.
    Hanoi(HanoiState),
    Messenger(MessengerObservation),
    Grid(GridObservation),
}

impl Observation {
    /// The same payload without the "last action" echo, as stored in the
    /// trajectory where the action is already named.
    pub fn without_last_action(&self) -> Observation {
        match self {
            Observation::Messenger(m) => Observation::Messenger(m.without_last_action()),
            other => other.clone(),
        }
    }
}
