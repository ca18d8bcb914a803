//! Score-delta and watermark gates.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

use super::verdict::{FilterVerdict, Reason};

pub const DEFAULT_MIN_DELTA: f64 = 1.0;

/// Passes iff the clean image scores at least `min_delta` above the
/// degraded one. A degraded image scoring higher than its clean source is
/// rejected whatever `min_delta` is.
pub fn degradation_delta_filter(clean_score: f64, degraded_score: f64, min_delta: f64) -> Result<FilterVerdict> {
    for (name, s) in [("clean", clean_score), ("degraded", degraded_score)] {
        if !(1.0..=5.0).contains(&s) {
            return Err(Error::Param(format!("{name} score {s} outside [1, 5]")));
        }
    }
    if min_delta.is_nan() || min_delta < 0.0 {
        return Err(Error::Param(format!("min_delta {min_delta} must be >= 0")));
    }
    let delta = clean_score - degraded_score;
    let ok = clean_score >= degraded_score && delta >= min_delta;
    Ok(FilterVerdict::from_check(ok, Reason::InsufficientDelta)
        .with("clean_score", clean_score)
        .with("degraded_score", degraded_score)
        .with("delta", delta))
}

#[derive(Deserialize)]
struct WatermarkLine {
    id: String,
    watermarked: bool,
}

/// External watermark verdicts from JSON Lines `{id, watermarked}`.
#[derive(Clone, Debug, Default)]
pub struct WatermarkVerdicts {
    verdicts: HashMap<String, bool>,
}

impl WatermarkVerdicts {
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut verdicts = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let l: WatermarkLine = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("watermark line {}: {e}", n + 1)))?;
            verdicts.insert(l.id, l.watermarked);
        }
        Ok(Self { verdicts })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_jsonl(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Unknown ids are rejected.
    pub fn check(&self, id: &str) -> FilterVerdict {
        match self.verdicts.get(id) {
            Some(false) => FilterVerdict::pass(),
            Some(true) => FilterVerdict::reject(Reason::Watermarked),
            None => FilterVerdict::reject(Reason::ExternalReject),
        }
    }
}

pub fn watermark_filter(image_id: &str, verdict_file: &Path) -> Result<FilterVerdict> {
    Ok(WatermarkVerdicts::load(verdict_file)?.check(image_id))
}
