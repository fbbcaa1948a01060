//! Observation encoders: text formats per family, images and oracle maps.

pub mod grid;
pub mod hanoi;
pub mod image;
pub mod messenger;
pub mod vot;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::Family;
use crate::environments::Observation;

pub use grid::encode_grid;
pub use hanoi::{decode_hanoi, encode_hanoi, ParseError};
pub use image::render_image;
pub use messenger::encode_messenger;
pub use vot::{oracle_vot_map, parse_vot_map, VotMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Granularity {
    LongForm,
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Structure {
    NaturalLanguage,
    TaggedList,
    Matrix,
    DictList,
    NaturalLanguagePos,
    Coordinates,
    Symbolic,
}

impl Structure {
    pub const ALL: [Structure; 7] = [
        Structure::NaturalLanguage,
        Structure::TaggedList,
        Structure::Matrix,
        Structure::DictList,
        Structure::NaturalLanguagePos,
        Structure::Coordinates,
        Structure::Symbolic,
    ];

    pub fn valid_for(self, family: Family) -> bool {
        use Structure::*;
        match family {
            Family::Hanoi => matches!(self, NaturalLanguage | TaggedList | Matrix | DictList),
            Family::Messenger => matches!(
                self,
                NaturalLanguage | NaturalLanguagePos | Coordinates | Symbolic
            ),
            Family::Grid(_) => self == NaturalLanguage,
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Grounding {
    TextOnly,
    TextPlusImage,
    TextPlusVoT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OracleFlag {
    OracleSummary,
    OracleVoT,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepresentationError {
    #[error("OracleSummary requires Summary granularity")]
    OracleSummaryNeedsSummary,
    #[error("OracleVoT requires TextPlusVoT grounding")]
    OracleVotNeedsVot,
    #[error("structure {structure} is not defined for {family:?}")]
    StructureNotForFamily { structure: Structure, family: Family },
}

/// One point of the granularity × structure × grounding design space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepresentationSpec {
    pub granularity: Granularity,
    pub structure: Structure,
    pub grounding: Grounding,
    #[serde(default)]
    pub oracle_flags: BTreeSet<OracleFlag>,
}

impl RepresentationSpec {
    pub fn new(granularity: Granularity, structure: Structure, grounding: Grounding) -> Self {
        Self {
            granularity,
            structure,
            grounding,
            oracle_flags: BTreeSet::new(),
        }
    }

    pub fn with_flag(mut self, flag: OracleFlag) -> Self {
        self.oracle_flags.insert(flag);
        self
    }

    pub fn has(&self, flag: OracleFlag) -> bool {
        self.oracle_flags.contains(&flag)
    }

    /// Checks flag consistency and, when `family` is given, that the
    /// structure exists for it.
    pub fn validate(&self, family: Option<Family>) -> Result<(), RepresentationError> {
        if self.has(OracleFlag::OracleSummary) && self.granularity != Granularity::Summary {
            return Err(RepresentationError::OracleSummaryNeedsSummary);
        }
        if self.has(OracleFlag::OracleVoT) && self.grounding != Grounding::TextPlusVoT {
            return Err(RepresentationError::OracleVotNeedsVot);
        }
        if let Some(family) = family {
            if !self.structure.valid_for(family) {
                return Err(RepresentationError::StructureNotForFamily {
                    structure: self.structure,
                    family,
                });
            }
        }
        Ok(())
    }

    /// Short label such as `Summary/DictList/TextOnly+OracleSummary`.
    pub fn label(&self) -> String {
        let mut s = format!("{:?}/{:?}/{:?}", self.granularity, self.structure, self.grounding);
        for flag in &self.oracle_flags {
            s.push_str(&format!("+{flag:?}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedObservation {
    pub text: String,
    /// PNG bytes; present exactly when grounding is `TextPlusImage`.
    pub image: Option<Vec<u8>>,
    pub format_label: Structure,
}

/// Text of `obs` under `structure`. The structure must belong to the
/// observation's family.
pub fn encode_text(obs: &Observation, structure: Structure) -> Result<String, RepresentationError> {
    let family_err = |family| RepresentationError::StructureNotForFamily { structure, family };
    match obs {
        Observation::Hanoi(s) if structure.valid_for(Family::Hanoi) => Ok(encode_hanoi(s, structure)),
        Observation::Hanoi(_) => Err(family_err(Family::Hanoi)),
        Observation::Messenger(m) if structure.valid_for(Family::Messenger) => {
            Ok(encode_messenger(m, structure))
        }
        Observation::Messenger(_) => Err(family_err(Family::Messenger)),
        Observation::Grid(g) if structure == Structure::NaturalLanguage => Ok(encode_grid(g)),
        Observation::Grid(_) => Err(RepresentationError::StructureNotForFamily {
            structure,
            family: Family::Grid(crate::environments::grid::MissionTask::GoTo),
        }),
    }
}

/// Encodes `obs` under `spec`, attaching an image when the grounding asks
/// for one.
pub fn encode(obs: &Observation, spec: &RepresentationSpec) -> Result<EncodedObservation, RepresentationError> {
    spec.validate(None)?;
    let text = encode_text(obs, spec.structure)?;
    let image = (spec.grounding == Grounding::TextPlusImage).then(|| render_image(obs));
    Ok(EncodedObservation {
        text,
        image,
        format_label: spec.structure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::HanoiState;

    #[test]
    fn flag_invariants() {
        let base = RepresentationSpec::new(Granularity::LongForm, Structure::DictList, Grounding::TextOnly);
        assert_eq!(
            base.clone().with_flag(OracleFlag::OracleSummary).validate(None),
            Err(RepresentationError::OracleSummaryNeedsSummary)
        );
        assert_eq!(
            base.clone().with_flag(OracleFlag::OracleVoT).validate(None),
            Err(RepresentationError::OracleVotNeedsVot)
        );
        assert!(base.validate(Some(Family::Hanoi)).is_ok());
        assert!(base.validate(Some(Family::Messenger)).is_err());
    }

    #[test]
    fn image_iff_image_grounding() {
        let obs = Observation::Hanoi(HanoiState::initial(3));
        for grounding in [Grounding::TextOnly, Grounding::TextPlusImage, Grounding::TextPlusVoT] {
            let spec = RepresentationSpec::new(Granularity::LongForm, Structure::Matrix, grounding);
            let enc = encode(&obs, &spec).unwrap();
            assert_eq!(enc.image.is_some(), grounding == Grounding::TextPlusImage);
            assert_eq!(enc.format_label, Structure::Matrix);
        }
        let bad = RepresentationSpec::new(Granularity::LongForm, Structure::Symbolic, Grounding::TextOnly);
        assert!(encode(&obs, &bad).is_err());
    }
}
