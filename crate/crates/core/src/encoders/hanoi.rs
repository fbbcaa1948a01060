//! Hanoi text formats and their strict decoders.

use thiserror::Error;

use super::Structure;
use crate::environments::hanoi::{HanoiState, Peg};

/// Padding value for empty slots in the matrix format. Never a disk id.
pub const MATRIX_PAD: i32 = -1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(position: usize, message: impl Into<String>) -> Self {
        Self {
            position,
            message: message.into(),
        }
    }
}

fn list(disks: &[u8]) -> String {
    let items: Vec<String> = disks.iter().map(u8::to_string).collect();
    format!("[{}]", items.join(", "))
}

fn natural_language(state: &HanoiState) -> String {
    let sentences: Vec<String> = Peg::ALL
        .iter()
        .map(|&peg| {
            let disks = state.peg(peg);
            match disks {
                [] => format!("Peg {peg} is empty."),
                [only] => format!("Peg {peg} has disk {only}."),
                [bottom, top] => {
                    format!("Peg {peg} has disk {bottom} at the bottom and disk {top} on top.")
                }
                [bottom, middle @ .., top] => {
                    let middle: Vec<String> = if middle.len() == 1 {
                        vec![format!("disk {} in the middle", middle[0])]
                    } else {
                        middle.iter().map(|d| format!("disk {d}")).collect()
                    };
                    format!(
                        "Peg {peg} has disk {bottom} at the bottom, {}, and disk {top} on top.",
                        middle.join(", ")
                    )
                }
            }
        })
        .collect();
    sentences.join(" ")
}

fn dict_list(state: &HanoiState) -> String {
    let entries: Vec<String> = Peg::ALL
        .iter()
        .map(|&peg| format!("'{peg}': {}", list(state.peg(peg))))
        .collect();
    format!("{{{}}}", entries.join(", "))
}

fn matrix(state: &HanoiState) -> String {
    let n = state.n_disks();
    let rows: Vec<String> = Peg::ALL
        .iter()
        .map(|&peg| {
            let mut cells: Vec<String> = state.peg(peg).iter().map(u8::to_string).collect();
            cells.resize(n, MATRIX_PAD.to_string());
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn tagged_list(state: &HanoiState) -> String {
    let lines: Vec<String> = Peg::ALL
        .iter()
        .map(|&peg| format!("- {peg}: |bottom, {}, top|", list(state.peg(peg))))
        .collect();
    lines.join("\n")
}

/// Renders `state` in one of the four Hanoi formats.
///
/// Panics if `structure` is not a Hanoi format; callers validate the
/// representation against the environment family first.
pub fn encode_hanoi(state: &HanoiState, structure: Structure) -> String {
    match structure {
        Structure::NaturalLanguage => natural_language(state),
        Structure::DictList => dict_list(state),
        Structure::Matrix => matrix(state),
        Structure::TaggedList => tagged_list(state),
        other => panic!("{other:?} is not a Hanoi format"),
    }
}

/// Byte cursor for the small hand-written parsers below.
struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.pos, message)
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        let rest = self.rest();
        let len = rest
            .char_indices()
            .take_while(|&(i, c)| c.is_ascii_digit() || (i == 0 && c == '-'))
            .count();
        let token = &rest[..len];
        let value = token
            .parse::<i32>()
            .map_err(|_| self.error("expected an integer"))?;
        self.pos += len;
        Ok(value)
    }

    /// `[a, b, c]` with the exact `", "` separator.
    fn int_list(&mut self) -> Result<Vec<i32>, ParseError> {
        self.expect("[")?;
        let mut items = Vec::new();
        if self.eat("]") {
            return Ok(items);
        }
        loop {
            items.push(self.integer()?);
            if self.eat("]") {
                return Ok(items);
            }
            self.expect(", ")?;
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos == self.text.len() {
            Ok(())
        } else {
            Err(self.error("trailing input"))
        }
    }
}

fn disks(values: Vec<i32>, at: usize) -> Result<Vec<u8>, ParseError> {
    values
        .into_iter()
        .map(|v| u8::try_from(v).map_err(|_| ParseError::new(at, format!("invalid disk id {v}"))))
        .collect()
}

fn build(pegs: [Vec<u8>; 3], at: usize) -> Result<HanoiState, ParseError> {
    HanoiState::from_pegs(pegs, Peg::C).map_err(|e| ParseError::new(at, e.0))
}

fn decode_dict_list(text: &str) -> Result<HanoiState, ParseError> {
    let mut c = Cursor::new(text);
    let mut pegs: [Vec<u8>; 3] = Default::default();
    c.expect("{")?;
    for (i, peg) in Peg::ALL.iter().enumerate() {
        if i > 0 {
            c.expect(", ")?;
        }
        c.expect(&format!("'{peg}': "))?;
        let at = c.pos;
        pegs[peg.index()] = disks(c.int_list()?, at)?;
    }
    c.expect("}")?;
    c.finish()?;
    build(pegs, 0)
}

fn decode_matrix(text: &str) -> Result<HanoiState, ParseError> {
    let mut c = Cursor::new(text);
    let mut rows: Vec<(usize, Vec<i32>)> = Vec::new();
    c.expect("[")?;
    for i in 0..3 {
        if i > 0 {
            c.expect(", ")?;
        }
        let at = c.pos;
        let row = c.int_list()?;
        if let Some((_, first)) = rows.first() {
            if row.len() != first.len() {
                return Err(ParseError::new(
                    at,
                    format!("ragged rows: expected {} slots, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push((at, row));
    }
    c.expect("]")?;
    c.finish()?;
    let width = rows[0].1.len();
    let mut pegs: [Vec<u8>; 3] = Default::default();
    for (i, (at, row)) in rows.into_iter().enumerate() {
        let filled = row.iter().take_while(|&&v| v != MATRIX_PAD).count();
        if row[filled..].iter().any(|&v| v != MATRIX_PAD) {
            return Err(ParseError::new(at, "disk after padding"));
        }
        pegs[i] = disks(row[..filled].to_vec(), at)?;
    }
    let state = build(pegs, 0)?;
    if state.n_disks() != width {
        return Err(ParseError::new(
            0,
            format!("{width} slots per row but {} disks", state.n_disks()),
        ));
    }
    Ok(state)
}

fn decode_tagged_list(text: &str) -> Result<HanoiState, ParseError> {
    let mut c = Cursor::new(text);
    let mut pegs: [Vec<u8>; 3] = Default::default();
    for (i, peg) in Peg::ALL.iter().enumerate() {
        if i > 0 {
            c.expect("\n")?;
        }
        c.expect(&format!("- {peg}: |bottom, "))?;
        let at = c.pos;
        pegs[peg.index()] = disks(c.int_list()?, at)?;
        c.expect(", top|")?;
    }
    c.finish()?;
    build(pegs, 0)
}

fn decode_natural_language(text: &str) -> Result<HanoiState, ParseError> {
    let mut pegs: [Vec<u8>; 3] = Default::default();
    let mut offset = 0;
    for (i, peg) in Peg::ALL.iter().enumerate() {
        let rest = &text[offset..];
        let end = rest
            .find('.')
            .ok_or_else(|| ParseError::new(offset, "expected a sentence"))?;
        let sentence = &rest[..end];
        let prefix = format!("Peg {peg} ");
        let body = sentence
            .strip_prefix(&prefix)
            .ok_or_else(|| ParseError::new(offset, format!("expected `{prefix}`")))?;
        if body != "is empty" {
            let body = body
                .strip_prefix("has ")
                .ok_or_else(|| ParseError::new(offset, "expected `has` or `is empty`"))?;
            let mut stack = Vec::new();
            for word in body.split(|c: char| !c.is_ascii_digit()) {
                if !word.is_empty() {
                    stack.push(
                        word.parse::<u8>()
                            .map_err(|_| ParseError::new(offset, "invalid disk id"))?,
                    );
                }
            }
            pegs[peg.index()] = stack;
        }
        offset += end + 1;
        if i < 2 {
            if !text[offset..].starts_with(' ') {
                return Err(ParseError::new(offset, "expected a space"));
            }
            offset += 1;
        }
    }
    if offset != text.len() {
        return Err(ParseError::new(offset, "trailing input"));
    }
    build(pegs, 0)
}

/// Inverse of [`encode_hanoi`]. The structured formats are the contract;
/// the natural-language form is accepted too so scripted policies can read
/// any Hanoi prompt.
pub fn decode_hanoi(text: &str, structure: Structure) -> Result<HanoiState, ParseError> {
    match structure {
        Structure::DictList => decode_dict_list(text),
        Structure::Matrix => decode_matrix(text),
        Structure::TaggedList => decode_tagged_list(text),
        Structure::NaturalLanguage => decode_natural_language(text),
        other => Err(ParseError::new(0, format!("{other:?} is not a Hanoi format"))),
    }
}
