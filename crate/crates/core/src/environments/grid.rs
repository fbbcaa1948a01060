//! Instruction-following grid world with MiniGrid-style dynamics.
//!
//! The agent sees a 7×7 egocentric window ahead of it; walls and closed
//! doors occlude what lies behind them.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Pos;
use crate::env::{TerminationCause, Transition};

pub const ACTION_LABELS: [&str; 6] = [
    "turn left",
    "turn right",
    "go forward",
    "pick up",
    "drop",
    "toggle",
];

pub const VIEW_SIZE: usize = 7;
pub const ROOM_SIZE: i32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Red,
    Green,
    Blue,
    Purple,
    Yellow,
    Grey,
}

impl Color {
    pub const ALL: [Color; 6] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Purple,
        Color::Yellow,
        Color::Grey,
    ];

    pub fn word(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Purple => "purple",
            Color::Yellow => "yellow",
            Color::Grey => "grey",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectKind {
    Ball,
    Box,
    Key,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 3] = [ObjectKind::Ball, ObjectKind::Box, ObjectKind::Key];

    pub fn word(self) -> &'static str {
        match self {
            ObjectKind::Ball => "ball",
            ObjectKind::Box => "box",
            ObjectKind::Key => "key",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Object {
    pub kind: ObjectKind,
    pub color: Color,
}

impl Object {
    pub fn new(kind: ObjectKind, color: Color) -> Self {
        Self { kind, color }
    }

    pub fn describe(self) -> String {
        format!("{} {}", self.color.word(), self.kind.word())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DoorState {
    Open,
    Closed,
    Locked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Empty,
    Wall,
    Door { color: Color, state: DoorState },
    Object(Object),
}

impl Cell {
    fn passable(self) -> bool {
        matches!(
            self,
            Cell::Empty
                | Cell::Door {
                    state: DoorState::Open,
                    ..
                }
        )
    }

    fn see_through(self) -> bool {
        match self {
            Cell::Wall => false,
            Cell::Door { state, .. } => state == DoorState::Open,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    /// (drow, dcol) of one step forward.
    pub fn forward(self) -> (i32, i32) {
        match self {
            Heading::North => (-1, 0),
            Heading::East => (0, 1),
            Heading::South => (1, 0),
            Heading::West => (0, -1),
        }
    }

    pub fn right(self) -> Heading {
        Heading::ALL[(self as usize + 1) % 4]
    }

    pub fn left(self) -> Heading {
        Heading::ALL[(self as usize + 3) % 4]
    }

    pub fn word(self) -> &'static str {
        match self {
            Heading::North => "north",
            Heading::East => "east",
            Heading::South => "south",
            Heading::West => "west",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MissionTask {
    GoTo,
    Open,
    Pickup,
    PutNext,
    PickUpSeqGoTo,
}

impl MissionTask {
    pub fn arity(self) -> usize {
        match self {
            MissionTask::PutNext | MissionTask::PickUpSeqGoTo => 2,
            _ => 1,
        }
    }
}

/// What a mission refers to: an object or a door, by color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Referent {
    Object(Object),
    Door(Color),
}

impl Referent {
    pub fn describe(self) -> String {
        match self {
            Referent::Object(o) => o.describe(),
            Referent::Door(c) => format!("{} door", c.word()),
        }
    }

    fn matches(self, cell: Cell) -> bool {
        match (self, cell) {
            (Referent::Object(o), Cell::Object(p)) => o == p,
            (Referent::Door(c), Cell::Door { color, .. }) => c == color,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissionSpec {
    pub task: MissionTask,
    pub referents: Vec<Referent>,
    pub mission_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidMission(pub String);

impl MissionSpec {
    pub fn new(task: MissionTask, referents: Vec<Referent>) -> Result<Self, InvalidMission> {
        if referents.len() != task.arity() {
            return Err(InvalidMission(format!(
                "{task:?} takes {} referent(s), got {}",
                task.arity(),
                referents.len()
            )));
        }
        let first = referents[0].describe();
        let mission_text = match task {
            MissionTask::GoTo => format!("go to the {first}"),
            MissionTask::Open => match referents[0] {
                Referent::Door(_) => format!("open the {first}"),
                Referent::Object(_) => {
                    return Err(InvalidMission("Open needs a door referent".into()))
                }
            },
            MissionTask::Pickup => format!("pick up the {first}"),
            MissionTask::PutNext => {
                format!("put the {first} next to the {}", referents[1].describe())
            }
            MissionTask::PickUpSeqGoTo => {
                format!("pick up the {first}, then go to the {}", referents[1].describe())
            }
        };
        if matches!(
            task,
            MissionTask::Pickup | MissionTask::PutNext | MissionTask::PickUpSeqGoTo
        ) && !matches!(referents[0], Referent::Object(_))
        {
            return Err(InvalidMission(format!("{task:?} must start with an object")));
        }
        Ok(Self {
            task,
            referents,
            mission_text,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridAgent {
    pub pos: Pos,
    pub heading: Heading,
    pub carrying: Option<Object>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridWorldState {
    pub width: i32,
    pub height: i32,
    cells: Vec<Cell>,
    pub agent: GridAgent,
    pub mission: MissionSpec,
    /// Set once the first referent of a PickUpSeqGoTo mission was picked up.
    pub first_subgoal_done: bool,
}

/// One cell of the egocentric window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViewCell {
    Unseen,
    Visible(Cell),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridObservation {
    /// `view[row][col]`: row 0 is farthest ahead, row 6 holds the agent at
    /// column 3; columns grow to the agent's right.
    pub view: [[ViewCell; VIEW_SIZE]; VIEW_SIZE],
    pub heading: Heading,
    pub carrying: Option<Object>,
    pub mission_text: String,
}

impl GridObservation {
    /// Cell `forward` steps ahead and `lateral` steps to the right
    /// (negative = left). `None` outside the window.
    pub fn relative(&self, forward: i32, lateral: i32) -> Option<ViewCell> {
        let row = VIEW_SIZE as i32 - 1 - forward;
        let col = VIEW_SIZE as i32 / 2 + lateral;
        if !(0..VIEW_SIZE as i32).contains(&row) || !(0..VIEW_SIZE as i32).contains(&col) {
            return None;
        }
        Some(self.view[row as usize][col as usize])
    }
}

impl GridWorldState {
    /// Walled room of `width`×`height` with an empty interior.
    pub fn empty_room(width: i32, height: i32, agent: GridAgent, mission: MissionSpec) -> Self {
        let mut cells = vec![Cell::Empty; (width * height) as usize];
        for row in 0..height {
            for col in 0..width {
                if row == 0 || col == 0 || row == height - 1 || col == width - 1 {
                    cells[(row * width + col) as usize] = Cell::Wall;
                }
            }
        }
        Self {
            width,
            height,
            cells,
            agent,
            mission,
            first_subgoal_done: false,
        }
    }

    pub fn in_bounds(&self, pos: Pos) -> bool {
        pos.row >= 0 && pos.col >= 0 && pos.row < self.height && pos.col < self.width
    }

    /// Out-of-bounds cells read as walls.
    pub fn get(&self, pos: Pos) -> Cell {
        if self.in_bounds(pos) {
            self.cells[(pos.row * self.width + pos.col) as usize]
        } else {
            Cell::Wall
        }
    }

    pub fn set(&mut self, pos: Pos, cell: Cell) {
        assert!(self.in_bounds(pos), "{pos} outside the grid");
        let w = self.width;
        self.cells[(pos.row * w + pos.col) as usize] = cell;
    }

    pub fn front(&self) -> Pos {
        let (dr, dc) = self.agent.heading.forward();
        self.agent.pos.offset(dr, dc)
    }

    pub fn cells(&self) -> impl Iterator<Item = (Pos, Cell)> + '_ {
        (0..self.height).flat_map(move |row| {
            (0..self.width).map(move |col| {
                let p = Pos::new(row, col);
                (p, self.get(p))
            })
        })
    }

    fn find_adjacent(&self, first: Object, second: Referent) -> bool {
        self.cells().any(|(p, cell)| {
            cell == Cell::Object(first)
                && [(-1, 0), (1, 0), (0, -1), (0, 1)]
                    .iter()
                    .any(|&(dr, dc)| second.matches(self.get(p.offset(dr, dc))))
        })
    }

    /// Mission success, a pure function of the state.
    pub fn is_success(&self) -> bool {
        let refs = &self.mission.referents;
        let facing = self.get(self.front());
        match self.mission.task {
            MissionTask::GoTo => refs[0].matches(facing),
            MissionTask::Open => self.cells().any(|(_, cell)| {
                matches!(cell, Cell::Door { state: DoorState::Open, .. }) && refs[0].matches(cell)
            }),
            MissionTask::Pickup => match refs[0] {
                Referent::Object(o) => self.agent.carrying == Some(o),
                Referent::Door(_) => false,
            },
            MissionTask::PutNext => match refs[0] {
                Referent::Object(o) => self.find_adjacent(o, refs[1]),
                Referent::Door(_) => false,
            },
            MissionTask::PickUpSeqGoTo => self.first_subgoal_done && refs[1].matches(facing),
        }
    }

    pub(crate) fn step_action(&mut self, action_index: usize) -> Transition {
        let front = self.front();
        let facing = self.get(front);
        match action_index {
            1 => self.agent.heading = self.agent.heading.left(),
            2 => self.agent.heading = self.agent.heading.right(),
            3 => {
                if self.in_bounds(front) && facing.passable() {
                    self.agent.pos = front;
                }
            }
            4 => {
                if let (None, Cell::Object(obj)) = (self.agent.carrying, facing) {
                    self.agent.carrying = Some(obj);
                    self.set(front, Cell::Empty);
                    if self.mission.task == MissionTask::PickUpSeqGoTo
                        && self.mission.referents[0] == Referent::Object(obj)
                    {
                        self.first_subgoal_done = true;
                    }
                }
            }
            5 => {
                if let (Some(obj), Cell::Empty) = (self.agent.carrying, facing) {
                    if self.in_bounds(front) {
                        self.set(front, Cell::Object(obj));
                        self.agent.carrying = None;
                    }
                }
            }
            6 => {
                if let Cell::Door { color, state } = facing {
                    let next = match state {
                        DoorState::Open => DoorState::Closed,
                        DoorState::Closed => DoorState::Open,
                        DoorState::Locked
                            if self.agent.carrying == Some(Object::new(ObjectKind::Key, color)) =>
                        {
                            DoorState::Open
                        }
                        DoorState::Locked => DoorState::Locked,
                    };
                    self.set(front, Cell::Door { color, state: next });
                }
            }
            _ => unreachable!("index checked by Env"),
        }
        if self.is_success() {
            Transition {
                reward: 1.0,
                cause: TerminationCause::GoalReached,
            }
        } else {
            Transition {
                reward: 0.0,
                cause: TerminationCause::None,
            }
        }
    }

    /// World position of egocentric window cell (`row`, `col`).
    fn view_to_world(&self, row: usize, col: usize) -> Pos {
        let forward = (VIEW_SIZE - 1 - row) as i32;
        let lateral = col as i32 - (VIEW_SIZE / 2) as i32;
        let (fr, fc) = self.agent.heading.forward();
        let (rr, rc) = self.agent.heading.right().forward();
        self.agent
            .pos
            .offset(fr * forward + rr * lateral, fc * forward + rc * lateral)
    }

    pub fn observe(&self) -> GridObservation {
        let n = VIEW_SIZE;
        let mut cells = [[Cell::Wall; VIEW_SIZE]; VIEW_SIZE];
        for (row, line) in cells.iter_mut().enumerate() {
            for (col, cell) in line.iter_mut().enumerate() {
                *cell = self.get(self.view_to_world(row, col));
            }
        }
        cells[n - 1][n / 2] = Cell::Empty;
        let mask = visibility_mask(&cells);
        let mut view = [[ViewCell::Unseen; VIEW_SIZE]; VIEW_SIZE];
        for row in 0..n {
            for col in 0..n {
                if mask[row][col] {
                    view[row][col] = ViewCell::Visible(cells[row][col]);
                }
            }
        }
        GridObservation {
            view,
            heading: self.agent.heading,
            carrying: self.agent.carrying,
            mission_text: self.mission.mission_text.clone(),
        }
    }

    /// Seeded layout for `task`: an 8×8 room, or two 8×8 rooms sharing a wall
    /// with a closed door for `Open`. Object descriptors are pairwise
    /// distinct so missions are unambiguous.
    pub fn generate(task: MissionTask, rng: &mut impl Rng) -> Self {
        loop {
            let state = Self::generate_once(task, rng);
            if !state.is_success() {
                return state;
            }
        }
    }

    fn generate_once(task: MissionTask, rng: &mut impl Rng) -> Self {
        let two_rooms = task == MissionTask::Open;
        let width = if two_rooms { 2 * ROOM_SIZE - 1 } else { ROOM_SIZE };
        let height = ROOM_SIZE;

        let mut descriptors: Vec<Object> = ObjectKind::ALL
            .iter()
            .flat_map(|&k| Color::ALL.iter().map(move |&c| Object::new(k, c)))
            .collect();
        descriptors.shuffle(rng);
        let n_objects = if two_rooms { 3 } else { 4 };
        let objects: Vec<Object> = descriptors.into_iter().take(n_objects).collect();

        let door_color = *Color::ALL.choose(rng).expect("colors");
        let referents = match task {
            MissionTask::Open => vec![Referent::Door(door_color)],
            MissionTask::GoTo | MissionTask::Pickup => vec![Referent::Object(objects[0])],
            MissionTask::PutNext | MissionTask::PickUpSeqGoTo => {
                vec![Referent::Object(objects[0]), Referent::Object(objects[1])]
            }
        };
        let mission = MissionSpec::new(task, referents).expect("generated mission is well-formed");
        let placeholder = GridAgent {
            pos: Pos::new(1, 1),
            heading: Heading::East,
            carrying: None,
        };
        let mut state = Self::empty_room(width, height, placeholder, mission);
        if two_rooms {
            let wall_col = ROOM_SIZE - 1;
            for row in 0..height {
                state.set(Pos::new(row, wall_col), Cell::Wall);
            }
            let door_row = rng.random_range(1..height - 1);
            state.set(
                Pos::new(door_row, wall_col),
                Cell::Door {
                    color: door_color,
                    state: DoorState::Closed,
                },
            );
        }

        let mut free: Vec<Pos> = state
            .cells()
            .filter(|(_, c)| *c == Cell::Empty)
            .map(|(p, _)| p)
            .collect();
        free.shuffle(rng);
        let mut free = free.into_iter();
        for obj in &objects {
            let p = free.next().expect("room has space");
            state.set(p, Cell::Object(*obj));
        }
        // The agent starts in the left room.
        let agent_pos = free
            .find(|p| p.col < ROOM_SIZE - 1)
            .expect("room has space");
        state.agent = GridAgent {
            pos: agent_pos,
            heading: *Heading::ALL.choose(rng).expect("headings"),
            carrying: None,
        };
        state
    }
}

/// Cells of the window visible from the agent (row 6, col 3), propagating
/// from the agent outward and stopping at opaque cells.
pub fn visibility_mask(cells: &[[Cell; VIEW_SIZE]; VIEW_SIZE]) -> [[bool; VIEW_SIZE]; VIEW_SIZE] {
    let n = VIEW_SIZE;
    let mut mask = [[false; VIEW_SIZE]; VIEW_SIZE];
    mask[n - 1][n / 2] = true;
    for row in (0..n).rev() {
        for col in 0..n - 1 {
            if !mask[row][col] || !cells[row][col].see_through() {
                continue;
            }
            mask[row][col + 1] = true;
            if row > 0 {
                mask[row - 1][col + 1] = true;
                mask[row - 1][col] = true;
            }
        }
        for col in (1..n).rev() {
            if !mask[row][col] || !cells[row][col].see_through() {
                continue;
            }
            mask[row][col - 1] = true;
            if row > 0 {
                mask[row - 1][col - 1] = true;
                mask[row - 1][col] = true;
            }
        }
    }
    mask
}
