//! Programmatic ground-truth maps in the top-down ASCII form, and a parser
//! for the grid variant.

use std::collections::{BTreeMap, BTreeSet};

use super::hanoi::ParseError;
use crate::env::FamilyState;
use crate::environments::grid::{Cell, DoorState, GridWorldState};
use crate::environments::hanoi::{HanoiState, Peg};
use crate::environments::messenger::MessengerState;
use crate::environments::Pos;

pub const MAP_HEADER: &str = "Map (Top-Down View):";
pub const AGENT_GLYPH: char = 'A';
pub const WALL_GLYPH: char = '#';
pub const EMPTY_GLYPH: char = '.';

/// Ground-truth map for any family.
pub fn oracle_vot_map(state: &FamilyState) -> String {
    match state {
        FamilyState::Hanoi(s) => hanoi_vot_map(s),
        FamilyState::Messenger(s) => messenger_vot_map(s),
        FamilyState::Grid(s) => grid_vot_map(s),
    }
}

pub fn hanoi_vot_map(state: &HanoiState) -> String {
    let mut out = String::from(MAP_HEADER);
    for peg in Peg::ALL {
        let disks = state.peg(peg);
        let items: Vec<String> = disks.iter().map(u8::to_string).collect();
        out.push_str(&format!("\nRod {peg}: [{}]", items.join(", ")));
        if let (Some(bottom), Some(top)) = (disks.first(), disks.last()) {
            out.push_str(&format!("  (top is {top}, bottom is {bottom})"));
        }
    }
    out
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Picks the first unused letter of `name`, then any unused letter, then a
/// digit. `A`, `#` and `.` are reserved.
fn pick_glyph(name: &str, used: &mut BTreeSet<char>) -> char {
    let preferred = name
        .chars()
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_uppercase());
    let fallback = ('B'..='Z').chain('1'..='9').chain('a'..='z');
    let glyph = preferred
        .chain(fallback)
        .find(|c| *c != AGENT_GLYPH && !used.contains(c))
        .expect("fewer entities than glyphs");
    used.insert(glyph);
    glyph
}

struct MapBuilder {
    rows: Vec<Vec<char>>,
    legend: Vec<(char, String)>,
    used: BTreeSet<char>,
}

impl MapBuilder {
    fn new(height: usize, width: usize) -> Self {
        Self {
            rows: vec![vec![EMPTY_GLYPH; width]; height],
            legend: Vec::new(),
            used: BTreeSet::new(),
        }
    }

    fn place(&mut self, pos: Pos, glyph: char) {
        self.rows[pos.row as usize][pos.col as usize] = glyph;
    }

    fn add(&mut self, name: &str, pos: Pos, description: String) {
        let glyph = pick_glyph(name, &mut self.used);
        self.place(pos, glyph);
        self.legend.push((glyph, description));
    }

    fn render(self, agent_pos: Pos, agent_description: String) -> String {
        let mut rows = self.rows;
        rows[agent_pos.row as usize][agent_pos.col as usize] = AGENT_GLYPH;
        let mut out = String::from(MAP_HEADER);
        for (i, row) in rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(char::to_string).collect();
            out.push_str(&format!("\nRow{}: {}", i + 1, cells.join(" ")));
        }
        out.push_str("\nLegend:");
        out.push_str(&format!("\n{AGENT_GLYPH} = {agent_description}"));
        for (glyph, description) in self.legend {
            out.push_str(&format!("\n{glyph} = {description}"));
        }
        out
    }
}

pub fn messenger_vot_map(state: &MessengerState) -> String {
    let mut map = MapBuilder::new(state.rows as usize, state.cols as usize);
    for e in state.visible_entities() {
        map.add(
            &e.name,
            e.pos,
            format!("{} ({}; {})", capitalize(&e.name), e.role.word(), e.synonym),
        );
    }
    let agent = if state.has_message {
        "Agent (carrying the message)"
    } else {
        "Agent"
    };
    map.render(state.agent, agent.to_string())
}

pub fn grid_vot_map(state: &GridWorldState) -> String {
    let mut map = MapBuilder::new(state.height as usize, state.width as usize);
    map.used.insert(WALL_GLYPH);
    let mut walls = false;
    for (pos, cell) in state.cells() {
        match cell {
            Cell::Empty => {}
            Cell::Wall => {
                map.place(pos, WALL_GLYPH);
                walls = true;
            }
            Cell::Object(o) => {
                let name = format!("{} {}", o.kind.word(), o.color.word());
                map.add(&name, pos, capitalize(&o.describe()));
            }
            Cell::Door { color, state } => {
                let word = match state {
                    DoorState::Open => "open",
                    DoorState::Closed => "closed",
                    DoorState::Locked => "locked",
                };
                let name = format!("door {}", color.word());
                map.add(&name, pos, format!("{} door ({word})", capitalize(color.word())));
            }
        }
    }
    if walls {
        map.legend.insert(0, (WALL_GLYPH, "Wall".to_string()));
    }
    let carrying = match state.agent.carrying {
        Some(o) => format!("carrying a {}", o.describe()),
        None => "carrying nothing".to_string(),
    };
    map.render(
        state.agent.pos,
        format!("Agent (facing {}; {carrying})", state.agent.heading.word()),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VotEntry {
    pub glyph: char,
    pub description: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VotMap {
    pub height: usize,
    pub width: usize,
    pub agent: Pos,
    /// Legend entries other than the agent, walls and empty cells, in
    /// legend order.
    pub entities: Vec<VotEntry>,
}

impl VotMap {
    pub fn position_of(&self, description_prefix: &str) -> Option<Pos> {
        self.entities
            .iter()
            .find(|e| e.description.starts_with(description_prefix))
            .map(|e| e.pos)
    }
}

/// Parses the grid form produced by [`oracle_vot_map`].
pub fn parse_vot_map(text: &str) -> Result<VotMap, ParseError> {
    let mut offset = 0;
    let all: Vec<(usize, &str)> = text
        .split('\n')
        .map(|line| {
            let at = offset;
            offset += line.len() + 1;
            (at, line.trim_end_matches('\r'))
        })
        .collect();
    let end = text.len();
    let mut lines = all.into_iter();

    let header = lines
        .by_ref()
        .find(|(_, l)| l.trim() == MAP_HEADER)
        .ok_or_else(|| ParseError::new(0, "missing map header"))?;

    let mut rows: Vec<Vec<char>> = Vec::new();
    let mut legend_at = None;
    for (at, line) in lines.by_ref() {
        let line = line.trim();
        if line == "Legend:" {
            legend_at = Some(at);
            break;
        }
        let prefix = format!("Row{}: ", rows.len() + 1);
        let cells = line
            .strip_prefix(&prefix)
            .ok_or_else(|| ParseError::new(at, format!("expected `{prefix}` or `Legend:`")))?;
        let row: Vec<char> = cells
            .split(' ')
            .map(|g| {
                let mut it = g.chars();
                match (it.next(), it.next()) {
                    (Some(c), None) => Ok(c),
                    _ => Err(ParseError::new(at, format!("bad cell `{g}`"))),
                }
            })
            .collect::<Result<_, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(ParseError::new(at, "ragged map rows"));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ParseError::new(header.0, "map has no rows"));
    }
    let legend_at = legend_at.ok_or_else(|| ParseError::new(end, "missing legend"))?;

    let mut legend: BTreeMap<char, String> = BTreeMap::new();
    let mut order = Vec::new();
    for (at, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            break;
        }
        let (glyph, description) = line
            .split_once(" = ")
            .ok_or_else(|| ParseError::new(at, "expected `G = description`"))?;
        let mut chars = glyph.chars();
        let glyph = match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => return Err(ParseError::new(at, format!("bad glyph `{glyph}`"))),
        };
        if legend.insert(glyph, description.to_string()).is_some() {
            return Err(ParseError::new(at, format!("glyph `{glyph}` defined twice")));
        }
        order.push(glyph);
    }
    if !legend.contains_key(&AGENT_GLYPH) {
        return Err(ParseError::new(legend_at, "legend has no agent"));
    }

    let mut positions: BTreeMap<char, Pos> = BTreeMap::new();
    for (r, row) in rows.iter().enumerate() {
        for (c, &glyph) in row.iter().enumerate() {
            if glyph == EMPTY_GLYPH || glyph == WALL_GLYPH {
                continue;
            }
            if !legend.contains_key(&glyph) {
                return Err(ParseError::new(legend_at, format!("glyph `{glyph}` not in legend")));
            }
            let pos = Pos::new(r as i32, c as i32);
            if positions.insert(glyph, pos).is_some() {
                return Err(ParseError::new(
                    legend_at,
                    format!("glyph `{glyph}` appears more than once on the map"),
                ));
            }
        }
    }

    let find = |glyph: char| {
        positions
            .get(&glyph)
            .copied()
            .ok_or_else(|| ParseError::new(legend_at, format!("glyph `{glyph}` not on the map")))
    };
    let agent = find(AGENT_GLYPH)?;
    let entities = order
        .into_iter()
        .filter(|g| *g != AGENT_GLYPH && *g != WALL_GLYPH && *g != EMPTY_GLYPH)
        .map(|glyph| {
            Ok(VotEntry {
                glyph,
                description: legend[&glyph].clone(),
                pos: find(glyph)?,
            })
        })
        .collect::<Result<_, ParseError>>()?;
    Ok(VotMap {
        height: rows.len(),
        width: rows[0].len(),
        agent,
        entities,
    })
}
