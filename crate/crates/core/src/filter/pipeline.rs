//! Ordered gate pipeline over a manifest.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::buffer::{load_image, ImageBuffer};
use crate::error::{Error, Result};
use crate::manifest::{Manifest, PairRecord};
use crate::metrics::ScorerBackend;

use super::gates::{degradation_delta_filter, WatermarkVerdicts, DEFAULT_MIN_DELTA};
use super::semantic::{semantic_filter, EmbedderBackend, PromptConfig, DEFAULT_SIMILARITY};
use super::shift::{skeleton_shift_filter, ShiftConfig};
use super::verdict::{FilterVerdict, Reason};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Semantic,
    Delta,
    Shift,
    Watermark,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Applied in order; a record stops at its first failing gate.
    pub gates: Vec<GateKind>,
    pub similarity: f64,
    pub min_delta: f64,
    pub shift: ShiftConfig,
    pub prompts: PromptConfig,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            gates: vec![GateKind::Delta, GateKind::Shift],
            similarity: DEFAULT_SIMILARITY,
            min_delta: DEFAULT_MIN_DELTA,
            shift: ShiftConfig::default(),
            prompts: PromptConfig::default(),
        }
    }
}

pub struct Backends<'a> {
    pub embedder: &'a dyn EmbedderBackend,
    pub scorer: &'a dyn ScorerBackend,
    pub watermarks: Option<&'a WatermarkVerdicts>,
}

/// One line of the filter report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub id: String,
    pub pass: bool,
    pub reason: Reason,
    pub measurements: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct FilterOutcome {
    pub kept: Manifest,
    pub rejected: Manifest,
    /// One line per input record, in input order.
    pub report: Vec<ReportLine>,
}

impl FilterOutcome {
    pub fn report_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for l in &self.report {
            out.push_str(&serde_json::to_string(l)?);
            out.push('\n');
        }
        Ok(out)
    }
}

struct Images<'a> {
    root: &'a Path,
    record: &'a PairRecord,
    clean: Option<ImageBuffer>,
    degraded: Option<ImageBuffer>,
}

impl Images<'_> {
    fn clean(&mut self) -> Result<&ImageBuffer> {
        if self.clean.is_none() {
            self.clean = Some(load_image(&self.root.join(&self.record.clean_path))?);
        }
        Ok(self.clean.as_ref().expect("loaded"))
    }

    fn degraded(&mut self) -> Result<&ImageBuffer> {
        if self.degraded.is_none() {
            self.degraded = Some(load_image(&self.root.join(&self.record.degraded_path))?);
        }
        Ok(self.degraded.as_ref().expect("loaded"))
    }
}

fn placeholder() -> ImageBuffer {
    ImageBuffer::new(1, 1, 3)
}

fn run_gate(gate: GateKind, imgs: &mut Images, cfg: &FilterConfig, be: &Backends) -> Result<FilterVerdict> {
    let r = imgs.record;
    let id = r.id();
    match gate {
        GateKind::Semantic => {
            if cfg.prompts.get(r.task).is_none() {
                return Ok(FilterVerdict::pass());
            }
            let img = if be.embedder.needs_pixels() {
                imgs.degraded()?.clone()
            } else {
                placeholder()
            };
            semantic_filter(id, &img, r.task, &cfg.prompts, be.embedder, cfg.similarity)
        }
        GateKind::Delta => {
            let (c, d) = if be.scorer.needs_pixels() {
                (imgs.clean()?.clone(), imgs.degraded()?.clone())
            } else {
                (placeholder(), placeholder())
            };
            let cs = be.scorer.score(&r.clean_path, &c, r.task)?;
            let ds = be.scorer.score(&r.degraded_path, &d, r.task)?;
            degradation_delta_filter(cs.value(), ds.value(), cfg.min_delta)
        }
        GateKind::Shift => {
            let c = imgs.clean()?.clone();
            skeleton_shift_filter(&c, imgs.degraded()?, &cfg.shift)
        }
        GateKind::Watermark => Ok(be
            .watermarks
            .ok_or_else(|| Error::Config("watermark gate without verdicts".into()))?
            .check(id)),
    }
}

fn filter_record(root: &Path, record: &PairRecord, cfg: &FilterConfig, be: &Backends) -> FilterVerdict {
    let mut imgs = Images {
        root,
        record,
        clean: None,
        degraded: None,
    };
    let mut measurements = BTreeMap::new();
    for gate in &cfg.gates {
        match run_gate(*gate, &mut imgs, cfg, be) {
            Ok(v) => {
                measurements.extend(v.measurements);
                if !v.pass {
                    return FilterVerdict {
                        pass: false,
                        reason: v.reason,
                        measurements,
                    };
                }
            }
            Err(e) => {
                log::warn!("{}: {gate:?} gate failed: {e}", record.id());
                return FilterVerdict {
                    pass: false,
                    reason: Reason::ExternalReject,
                    measurements,
                };
            }
        }
    }
    FilterVerdict {
        pass: true,
        reason: Reason::Ok,
        measurements,
    }
}

/// Splits `manifest` into kept and rejected records. Relative image paths
/// resolve against `root`. Gate failures reject the record as
/// `external_reject`.
pub fn run_filter_pipeline(manifest: &Manifest, root: &Path, cfg: &FilterConfig, backends: &Backends) -> Result<FilterOutcome> {
    if cfg.gates.is_empty() {
        return Err(Error::Config("filter pipeline needs at least one gate".into()));
    }
    if cfg.gates.contains(&GateKind::Watermark) && backends.watermarks.is_none() {
        return Err(Error::Config("watermark gate needs a verdict file".into()));
    }
    let verdicts: Vec<FilterVerdict> = manifest
        .records
        .par_iter()
        .map(|r| filter_record(root, r, cfg, backends))
        .collect();
    let (mut kept, mut rejected) = (Vec::new(), Vec::new());
    let mut report = Vec::with_capacity(verdicts.len());
    for (r, v) in manifest.records.iter().zip(verdicts) {
        report.push(ReportLine {
            id: r.id().to_string(),
            pass: v.pass,
            reason: v.reason,
            measurements: v.measurements,
        });
        if v.pass {
            kept.push(r.clone());
        } else {
            rejected.push(r.clone());
        }
    }
    Ok(FilterOutcome {
        kept: Manifest::new(kept),
        rejected: Manifest::new(rejected),
        report,
    })
}
