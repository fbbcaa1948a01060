//! Egocentric text for the BabyAI-like grid family.

use crate::environments::grid::{Cell, DoorState, GridObservation, ViewCell, VIEW_SIZE};

fn steps(n: i32) -> String {
    if n == 1 {
        "1 step".to_string()
    } else {
        format!("{n} steps")
    }
}

/// "2 steps forward", "1 step left", "3 steps forward and 1 step right".
pub fn egocentric_phrase(forward: i32, lateral: i32) -> String {
    let ahead = match forward {
        0 => None,
        f if f > 0 => Some(format!("{} forward", steps(f))),
        f => Some(format!("{} behind", steps(-f))),
    };
    let side = match lateral {
        0 => None,
        l if l > 0 => Some(format!("{} right", steps(l))),
        l => Some(format!("{} left", steps(-l))),
    };
    match (ahead, side) {
        (Some(a), Some(s)) => format!("{a} and {s}"),
        (Some(a), None) => a,
        (None, Some(s)) => s,
        (None, None) => "here".to_string(),
    }
}

fn describe_cell(cell: Cell) -> Option<String> {
    match cell {
        Cell::Object(o) => Some(format!("a {}", o.describe())),
        Cell::Door { color, state } => Some(match state {
            DoorState::Open => format!("an open {} door", color.word()),
            DoorState::Closed => format!("a closed {} door", color.word()),
            DoorState::Locked => format!("a locked {} door", color.word()),
        }),
        Cell::Empty | Cell::Wall => None,
    }
}

/// Mission, heading, inventory, then every visible object or door ordered
/// nearest row first and left to right.
pub fn encode_grid(obs: &GridObservation) -> String {
    let mut lines = vec![
        format!("Mission: {}", obs.mission_text),
        format!("You are facing {}.", obs.heading.word()),
        match obs.carrying {
            Some(o) => format!("Inventory: you are carrying a {}.", o.describe()),
            None => "Inventory: you are carrying nothing.".to_string(),
        },
    ];
    let mut seen = Vec::new();
    for row in (0..VIEW_SIZE).rev() {
        for col in 0..VIEW_SIZE {
            if let ViewCell::Visible(cell) = obs.view[row][col] {
                if let Some(what) = describe_cell(cell) {
                    let forward = (VIEW_SIZE - 1 - row) as i32;
                    let lateral = col as i32 - (VIEW_SIZE / 2) as i32;
                    seen.push(format!("- {what} {}", egocentric_phrase(forward, lateral)));
                }
            }
        }
    }
    if seen.is_empty() {
        lines.push("You see: nothing visible".to_string());
    } else {
        lines.push("You see:".to_string());
        lines.extend(seen);
    }
    lines.join("\n")
}
