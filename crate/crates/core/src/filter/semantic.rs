//! Prompt-based semantic filtering through a pluggable embedder.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::task::TaskKind;

use super::verdict::{FilterVerdict, Reason};

pub const DEFAULT_SIMILARITY: f64 = 0.22;

/// Degradation prompts keyed by task. Tasks without an entry have no
/// semantic filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub prompts: BTreeMap<TaskKind, String>,
}

impl Default for PromptConfig {
    fn default() -> Self {
        prompt_config_default()
    }
}

impl PromptConfig {
    pub fn get(&self, task: TaskKind) -> Option<&str> {
        self.prompts.get(&task).map(String::as_str)
    }
}

pub fn prompt_config_default() -> PromptConfig {
    let prompts = [
        (TaskKind::Flare, "a photo with lens flare, bright streaks of light"),
        (TaskKind::Haze, "a hazy photo, foggy atmosphere, low contrast"),
        (TaskKind::Rain, "a rainy photo with rain streaks or raindrops"),
        (TaskKind::LowLight, "a dark photo, underexposed, low illumination"),
        (TaskKind::Blur, "a blurry photo with motion blur or out-of-focus regions"),
        (TaskKind::Reflection, "a photo with glass or mirror-like reflection artifacts"),
    ];
    PromptConfig {
        prompts: prompts.into_iter().map(|(t, p)| (t, p.to_string())).collect(),
    }
}

pub trait EmbedderBackend: Sync {
    fn embed_image(&self, id: &str, img: &ImageBuffer) -> Result<Vec<f32>>;
    fn embed_text(&self, text: &str) -> Result<Vec<f32>>;

    /// Cosine similarity between an image and a prompt. Backends holding
    /// precomputed similarities override this.
    fn similarity(&self, id: &str, img: &ImageBuffer, prompt: &str) -> Result<f64> {
        cosine(&self.embed_image(id, img)?, &self.embed_text(prompt)?)
    }

    /// Whether `similarity` reads `img`. Lets callers skip decoding.
    fn needs_pixels(&self) -> bool {
        true
    }
}

/// Cosine similarity, clamped to [−1, 1].
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Backend(format!("embedding dimensions {} and {}", a.len(), b.len())));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 || !dot.is_finite() {
        return Err(Error::Backend("zero or non-finite embedding".into()));
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Embeds everything to the same unit vector, so every check passes.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullEmbedder;

impl EmbedderBackend for NullEmbedder {
    fn embed_image(&self, _: &str, _: &ImageBuffer) -> Result<Vec<f32>> {
        Ok(vec![1.0])
    }

    fn embed_text(&self, _: &str) -> Result<Vec<f32>> {
        Ok(vec![1.0])
    }

    fn needs_pixels(&self) -> bool {
        false
    }
}

#[derive(Deserialize)]
struct ScoreLine {
    id: String,
    score: f64,
}

/// Precomputed image–prompt similarities from JSON Lines `{id, score}`.
#[derive(Clone, Debug, Default)]
pub struct IngestedSimilarity {
    scores: HashMap<String, f64>,
}

impl IngestedSimilarity {
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut scores = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let l: ScoreLine = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("similarity line {}: {e}", n + 1)))?;
            if !(-1.0..=1.0).contains(&l.score) {
                return Err(Error::Format(format!("similarity line {}: {} outside [-1, 1]", n + 1, l.score)));
            }
            scores.insert(l.id, l.score);
        }
        Ok(Self { scores })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_jsonl(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn insert(&mut self, id: &str, score: f64) {
        self.scores.insert(id.to_string(), score);
    }
}

impl EmbedderBackend for IngestedSimilarity {
    fn embed_image(&self, _: &str, _: &ImageBuffer) -> Result<Vec<f32>> {
        Err(Error::Backend("ingested similarities carry no embeddings".into()))
    }

    fn embed_text(&self, _: &str) -> Result<Vec<f32>> {
        Err(Error::Backend("ingested similarities carry no embeddings".into()))
    }

    fn similarity(&self, id: &str, _: &ImageBuffer, _: &str) -> Result<f64> {
        self.scores
            .get(id)
            .copied()
            .ok_or_else(|| Error::Backend(format!("no similarity for {id}")))
    }

    fn needs_pixels(&self) -> bool {
        false
    }
}

/// Passes iff the image–prompt similarity reaches `threshold`.
pub fn semantic_filter(
    id: &str,
    img: &ImageBuffer,
    task: TaskKind,
    prompts: &PromptConfig,
    backend: &dyn EmbedderBackend,
    threshold: f64,
) -> Result<FilterVerdict> {
    if !(-1.0..=1.0).contains(&threshold) {
        return Err(Error::Param(format!("similarity threshold {threshold} outside [-1, 1]")));
    }
    let prompt = prompts
        .get(task)
        .ok_or_else(|| Error::Config(format!("no semantic prompt for {task}")))?;
    let sim = backend.similarity(id, img, prompt)?;
    Ok(FilterVerdict::from_check(sim >= threshold, Reason::LowSemanticScore).with("similarity", sim))
}
