//! The fixed 20-channel action-unit vocabulary and per-frame score vectors.
//!
//! Scores are confidences on a 0–100 scale. Smirk is the asymmetric lip
//! corner puller (AU12) or dimpler (AU14) and is treated as its own channel.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of action-unit channels.
pub const AU_COUNT: usize = 20;

/// One action-unit channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[allow(missing_docs)]
pub enum Au {
    Au1,
    Au2,
    Au4,
    Au5,
    Au6,
    Au7,
    Au9,
    Au10,
    Au12,
    Au14,
    Au15,
    Au17,
    Au18,
    Au20,
    Au24,
    Au25,
    Au26,
    Au28,
    Au43,
    Smirk,
}

/// All channels in canonical (column) order.
pub const ALL_AUS: [Au; AU_COUNT] = [
    Au::Au1,
    Au::Au2,
    Au::Au4,
    Au::Au5,
    Au::Au6,
    Au::Au7,
    Au::Au9,
    Au::Au10,
    Au::Au12,
    Au::Au14,
    Au::Au15,
    Au::Au17,
    Au::Au18,
    Au::Au20,
    Au::Au24,
    Au::Au25,
    Au::Au26,
    Au::Au28,
    Au::Au43,
    Au::Smirk,
];

impl Au {
    /// Position of this channel in the canonical order.
    pub fn index(self) -> usize {
        ALL_AUS.iter().position(|&a| a == self).unwrap()
    }

    /// Display name, e.g. `"AU12"` or `"Smirk"`.
    pub fn name(self) -> &'static str {
        match self {
            Au::Au1 => "AU1",
            Au::Au2 => "AU2",
            Au::Au4 => "AU4",
            Au::Au5 => "AU5",
            Au::Au6 => "AU6",
            Au::Au7 => "AU7",
            Au::Au9 => "AU9",
            Au::Au10 => "AU10",
            Au::Au12 => "AU12",
            Au::Au14 => "AU14",
            Au::Au15 => "AU15",
            Au::Au17 => "AU17",
            Au::Au18 => "AU18",
            Au::Au20 => "AU20",
            Au::Au24 => "AU24",
            Au::Au25 => "AU25",
            Au::Au26 => "AU26",
            Au::Au28 => "AU28",
            Au::Au43 => "AU43",
            Au::Smirk => "Smirk",
        }
    }

    /// Lower-case column name used in CSV headers, e.g. `"au12"` / `"smirk"`.
    pub fn column(self) -> String {
        self.name().to_ascii_lowercase()
    }

    /// Parse a channel name, case-insensitively (`"AU12"`, `"au12"`, `"Smirk"`).
    pub fn parse(name: &str) -> Result<Au> {
        let lower = name.to_ascii_lowercase();
        ALL_AUS
            .iter()
            .copied()
            .find(|au| au.column() == lower)
            .ok_or_else(|| Error::Config(format!("unknown action unit {name:?}")))
    }
}

impl fmt::Display for Au {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Au {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Au {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Au::parse(&s).map_err(D::Error::custom)
    }
}

/// A score per AU channel, each in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuScores([f64; AU_COUNT]);

impl AuScores {
    /// All channels at zero.
    pub fn zeros() -> Self {
        AuScores([0.0; AU_COUNT])
    }

    /// Build from raw channel values in canonical order after range-checking.
    pub fn from_array(values: [f64; AU_COUNT]) -> Result<Self> {
        for (au, &v) in ALL_AUS.iter().zip(values.iter()) {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::OutOfRange {
                    line: 0,
                    field: au.name().to_string(),
                    value: v,
                    min: 0.0,
                    max: 100.0,
                });
            }
        }
        Ok(AuScores(values))
    }

    pub fn get(&self, au: Au) -> f64 {
        self.0[au.index()]
    }

    /// Set one channel, clamping into `[0, 100]`.
    pub fn set(&mut self, au: Au, value: f64) {
        self.0[au.index()] = value.clamp(0.0, 100.0);
    }

    pub fn as_array(&self) -> &[f64; AU_COUNT] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Au, f64)> + '_ {
        ALL_AUS.iter().zip(self.0.iter()).map(|(&au, &v)| (au, v))
    }
}

impl Default for AuScores {
    fn default() -> Self {
        Self::zeros()
    }
}
