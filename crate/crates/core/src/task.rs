use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The nine restoration tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Blur,
    Compression,
    Moire,
    LowLight,
    Noise,
    Flare,
    Reflection,
    Haze,
    Rain,
}

impl TaskKind {
    pub const ALL: [TaskKind; 9] = [
        TaskKind::Blur,
        TaskKind::Compression,
        TaskKind::Moire,
        TaskKind::LowLight,
        TaskKind::Noise,
        TaskKind::Flare,
        TaskKind::Reflection,
        TaskKind::Haze,
        TaskKind::Rain,
    ];

    /// Machine name used in manifests, directory layouts and CSV.
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Blur => "blur",
            TaskKind::Compression => "compression",
            TaskKind::Moire => "moire",
            TaskKind::LowLight => "low_light",
            TaskKind::Noise => "noise",
            TaskKind::Flare => "flare",
            TaskKind::Reflection => "reflection",
            TaskKind::Haze => "haze",
            TaskKind::Rain => "rain",
        }
    }

    /// Human-readable degradation noun.
    pub fn degradation_noun(self) -> &'static str {
        match self {
            TaskKind::Blur => "blur",
            TaskKind::Compression => "compression artifacts",
            TaskKind::Moire => "moiré patterns",
            TaskKind::LowLight => "low-light",
            TaskKind::Noise => "noise",
            TaskKind::Flare => "lens flare",
            TaskKind::Reflection => "reflection",
            TaskKind::Haze => "haze",
            TaskKind::Rain => "rain",
        }
    }

    pub fn index(self) -> usize {
        TaskKind::ALL.iter().position(|&t| t == self).unwrap()
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let t = match norm.as_str() {
            "blur" | "deblur" | "deblurring" => TaskKind::Blur,
            "compression" | "jpeg" => TaskKind::Compression,
            "moire" | "moiré" => TaskKind::Moire,
            "low_light" | "lowlight" => TaskKind::LowLight,
            "noise" | "denoise" => TaskKind::Noise,
            "flare" | "deflare" => TaskKind::Flare,
            "reflection" => TaskKind::Reflection,
            "haze" | "hazy" | "dehaze" => TaskKind::Haze,
            "rain" | "derain" => TaskKind::Rain,
            _ => return Err(Error::Format(format!("unknown task {s:?}"))),
        };
        Ok(t)
    }
}

/// Normalized degradation strength: 0 is identity, 1 is the strongest
/// configured setting.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Severity(f64);

impl Severity {
    pub const ZERO: Severity = Severity(0.0);
    pub const MAX: Severity = Severity(1.0);

    pub fn new(value: f64) -> Result<Self, Error> {
        if (0.0..=1.0).contains(&value) {
            Ok(Severity(value))
        } else {
            Err(Error::Param(format!("severity {value} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Severity {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Severity::new(v)
    }
}

impl From<Severity> for f64 {
    fn from(s: Severity) -> f64 {
        s.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Synthetic,
    Real,
}
