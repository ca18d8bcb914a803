//! Degradation scores, scorer backends and the RS / FS composition.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::task::TaskKind;

use super::heuristic::heuristic_degradation_score;

/// Degradation level on the 1–5 scale, 5 meaning clean.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DegradationScore(f64);

impl DegradationScore {
    pub const MIN: f64 = 1.0;
    pub const MAX: f64 = 5.0;

    /// Clamps into [1, 5]. NaN maps to the worst score.
    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            return Self(Self::MIN);
        }
        Self(value.clamp(Self::MIN, Self::MAX))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub trait ScorerBackend: Sync {
    /// Score `img`, identified by `id`, for `task`.
    fn score(&self, id: &str, img: &ImageBuffer, task: TaskKind) -> Result<DegradationScore>;

    /// Whether `score` reads `img`. Lets callers skip decoding.
    fn needs_pixels(&self) -> bool {
        true
    }
}

/// Built-in no-reference statistics; supports blur, noise, low-light, haze
/// and compression.
#[derive(Clone, Copy, Debug, Default)]
pub struct HeuristicScorer;

impl ScorerBackend for HeuristicScorer {
    fn score(&self, _id: &str, img: &ImageBuffer, task: TaskKind) -> Result<DegradationScore> {
        heuristic_degradation_score(img, task)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreLine {
    id: String,
    task: TaskKind,
    score: f64,
}

/// Scores produced elsewhere, read from JSON Lines `{id, task, score}`.
#[derive(Clone, Debug, Default)]
pub struct IngestedScorer {
    scores: HashMap<(String, TaskKind), f64>,
}

impl IngestedScorer {
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut scores = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let l: ScoreLine = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("score line {}: {e}", n + 1)))?;
            if !l.score.is_finite() {
                return Err(Error::Format(format!("score line {}: non-finite score", n + 1)));
            }
            scores.insert((l.id, l.task), l.score);
        }
        Ok(Self { scores })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_jsonl(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn insert(&mut self, id: &str, task: TaskKind, score: f64) {
        self.scores.insert((id.to_string(), task), score);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl ScorerBackend for IngestedScorer {
    fn score(&self, id: &str, _img: &ImageBuffer, task: TaskKind) -> Result<DegradationScore> {
        self.scores
            .get(&(id.to_string(), task))
            .map(|s| DegradationScore::new(*s))
            .ok_or_else(|| Error::Lookup(format!("no {task} score for {id}")))
    }

    fn needs_pixels(&self) -> bool {
        false
    }
}

/// RS: restored score minus degraded score. Never clamped.
pub fn restoration_score(
    degraded: (&str, &ImageBuffer),
    restored: (&str, &ImageBuffer),
    task: TaskKind,
    backend: &dyn ScorerBackend,
) -> Result<f64> {
    let d = backend.score(degraded.0, degraded.1, task)?;
    let r = backend.score(restored.0, restored.1, task)?;
    Ok(r.value() - d.value())
}

/// FS = 0.2 · (1 − lps) · rs.
pub fn final_score(lps: f64, rs: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lps) {
        return Err(Error::Param(format!("lps {lps} outside [0, 1]")));
    }
    Ok(0.2 * (1.0 - lps) * rs)
}

/// One evaluated (degraded, restored) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub image_id: String,
    pub task: TaskKind,
    /// Absent when the record was built from published measurements.
    pub deg_score: Option<DegradationScore>,
    pub restored_score: Option<DegradationScore>,
    pub rs: f64,
    pub lps: f64,
    pub fs: f64,
}

impl EvalRecord {
    pub fn new(
        image_id: impl Into<String>,
        task: TaskKind,
        deg_score: DegradationScore,
        restored_score: DegradationScore,
        lps: f64,
    ) -> Result<Self> {
        let rs = restored_score.value() - deg_score.value();
        Ok(Self {
            image_id: image_id.into(),
            task,
            deg_score: Some(deg_score),
            restored_score: Some(restored_score),
            rs,
            lps,
            fs: final_score(lps, rs)?,
        })
    }

    /// A record from an already-averaged (lps, rs) pair.
    pub fn from_measurements(image_id: impl Into<String>, task: TaskKind, lps: f64, rs: f64) -> Result<Self> {
        if !(-4.0..=4.0).contains(&rs) {
            return Err(Error::Param(format!("rs {rs} outside [-4, 4]")));
        }
        Ok(Self {
            image_id: image_id.into(),
            task,
            deg_score: None,
            restored_score: None,
            rs,
            lps,
            fs: final_score(lps, rs)?,
        })
    }
}
