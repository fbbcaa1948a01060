//! `{name}` placeholder templates, filled in a single pass so slot values
//! are never re-scanned.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unterminated placeholder at byte {0}")]
    Unterminated(usize),
    #[error("template has no slot `{0}`")]
    UnknownSlot(String),
    #[error("slot `{0}` was not filled")]
    Unfilled(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    segments: Vec<Segment>,
}

fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c == '_')
}

impl Template {
    /// Braces that do not wrap a lowercase identifier are literal text.
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let mut segments = Vec::new();
        let mut text = String::new();
        let mut rest = source;
        let mut offset = 0;
        while let Some(open) = rest.find('{') {
            let close = rest[open..]
                .find('}')
                .ok_or(TemplateError::Unterminated(offset + open))?;
            let name = &rest[open + 1..open + close];
            text.push_str(&rest[..open]);
            if is_slot_name(name) {
                if !text.is_empty() {
                    segments.push(Segment::Text(std::mem::take(&mut text)));
                }
                segments.push(Segment::Slot(name.to_string()));
            } else {
                text.push_str(&rest[open..=open + close]);
            }
            offset += open + close + 1;
            rest = &rest[open + close + 1..];
        }
        text.push_str(rest);
        if !text.is_empty() {
            segments.push(Segment::Text(text));
        }
        Ok(Self { segments })
    }

    pub fn slots(&self) -> Vec<&str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Slot(n) => Some(n.as_str()),
                Segment::Text(_) => None,
            })
            .collect()
    }

    /// Fills every slot. Unknown or missing names are errors.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, TemplateError> {
        let map: BTreeMap<&str, &str> = values.iter().copied().collect();
        let slots = self.slots();
        if let Some((name, _)) = values.iter().find(|(n, _)| !slots.contains(n)) {
            return Err(TemplateError::UnknownSlot(name.to_string()));
        }
        let mut out = String::new();
        for segment in &self.segments {
            match segment {
                Segment::Text(t) => out.push_str(t),
                Segment::Slot(name) => out.push_str(
                    map.get(name.as_str())
                        .ok_or_else(|| TemplateError::Unfilled(name.clone()))?,
                ),
            }
        }
        Ok(out)
    }
}
