use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Ok,
    LowSemanticScore,
    InsufficientDelta,
    Misaligned,
    Watermarked,
    ExternalReject,
}

impl Reason {
    pub fn name(self) -> &'static str {
        match self {
            Reason::Ok => "ok",
            Reason::LowSemanticScore => "low_semantic_score",
            Reason::InsufficientDelta => "insufficient_delta",
            Reason::Misaligned => "misaligned",
            Reason::Watermarked => "watermarked",
            Reason::ExternalReject => "external_reject",
        }
    }
}

/// Outcome of one gate, or of a whole pipeline, for one record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub pass: bool,
    pub reason: Reason,
    pub measurements: BTreeMap<String, f64>,
}

impl FilterVerdict {
    pub fn pass() -> Self {
        Self {
            pass: true,
            reason: Reason::Ok,
            measurements: BTreeMap::new(),
        }
    }

    pub fn reject(reason: Reason) -> Self {
        debug_assert!(reason != Reason::Ok);
        Self {
            pass: false,
            reason,
            measurements: BTreeMap::new(),
        }
    }

    /// `pass()` if `ok`, else `reject(reason)`.
    pub fn from_check(ok: bool, reason: Reason) -> Self {
        if ok {
            Self::pass()
        } else {
            Self::reject(reason)
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.measurements.insert(name.to_string(), value);
        self
    }
}
