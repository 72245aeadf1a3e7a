use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Speaker category used to select a mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpeakerType {
    Male,
    Female,
    Child,
}

impl SpeakerType {
    /// Canonical order, matching the `M F C` column order of posterior files
    /// and the prior triple in mixture model files.
    pub const ALL: [SpeakerType; 3] = [SpeakerType::Male, SpeakerType::Female, SpeakerType::Child];

    pub fn index(self) -> usize {
        match self {
            SpeakerType::Male => 0,
            SpeakerType::Female => 1,
            SpeakerType::Child => 2,
        }
    }

    pub fn code(self) -> char {
        match self {
            SpeakerType::Male => 'M',
            SpeakerType::Female => 'F',
            SpeakerType::Child => 'C',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'M' => Some(SpeakerType::Male),
            'F' => Some(SpeakerType::Female),
            'C' => Some(SpeakerType::Child),
            _ => None,
        }
    }
}

impl fmt::Display for SpeakerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for SpeakerType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => SpeakerType::from_code(c),
            _ => match s.trim().to_ascii_lowercase().as_str() {
                "male" => Some(SpeakerType::Male),
                "female" => Some(SpeakerType::Female),
                "child" => Some(SpeakerType::Child),
                _ => None,
            },
        }
        .ok_or_else(|| Error::InvalidConfig(format!("unknown speaker type '{s}' (expected M, F or C)")))
    }
}
