use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rayon::prelude::*;

use crate::buffer::{encode_png, load_image, write_atomic, ImageBuffer};
use crate::degrade::{degrade, severity_to_params, Assets, DegradeContext, DegradeParams, SeverityMap};
use crate::error::{Error, Result};
use crate::manifest::{Manifest, PairRecord};
use crate::patterns::{load_pattern_bank, DepthMap, SegMask};
use crate::seed::SeedTree;
use crate::task::{Origin, Severity, TaskKind};

use super::{create_dir, RunConfig, SynthArgs};

const IMAGE_EXTS: [&str; 3] = ["png", "jpg", "jpeg"];

fn is_image(p: &Path) -> bool {
    p.is_file()
        && p.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Image files in `dir`, sorted by name.
pub(super) fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_image(p))
        .collect();
    out.sort();
    Ok(out)
}

pub(super) fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load_assets(args: &SynthArgs) -> Result<Assets> {
    let bank = |dir: &Option<PathBuf>, tag: &str| dir.as_deref().map(|d| load_pattern_bank(d, tag)).transpose();
    Ok(Assets {
        moire: bank(&args.moire_bank, "moire")?,
        flare: bank(&args.flare_bank, "flare")?,
        rain: bank(&args.rain_bank, "rain")?,
        haze: bank(&args.haze_bank, "haze")?,
    })
}

struct Sidecars {
    depth: Option<DepthMap>,
    mask: Option<SegMask>,
}

fn load_sidecars(args: &SynthArgs, stem: &str) -> Result<Sidecars> {
    let find = |dir: &Option<PathBuf>| dir.as_ref().map(|d| d.join(format!("{stem}.png"))).filter(|p| p.is_file());
    Ok(Sidecars {
        depth: find(&args.depth_dir).map(|p| DepthMap::load(&p)).transpose()?,
        mask: find(&args.mask_dir).map(|p| SegMask::load(&p)).transpose()?,
    })
}

fn write_png(img: &ImageBuffer, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    write_atomic(path, &encode_png(img)?)
}

fn degraded_rel(task: TaskKind, stem: &str) -> String {
    format!("degraded/{}/{stem}.png", task.name())
}

/// Severity drawn uniformly from `[lo, hi]` by `seed`.
fn draw_severity(seed: &SeedTree, lo: f64, hi: f64) -> Result<Severity> {
    let u: f64 = seed.rng().gen();
    Severity::new((lo + (hi - lo) * u).clamp(lo, hi))
}

struct Job<'a> {
    index: u64,
    path: &'a Path,
}

fn synth_image(job: &Job, cfg: &RunConfig, args: &SynthArgs, assets: &Assets, map: &SeverityMap) -> Result<Vec<PairRecord>> {
    let stem = stem(job.path);
    // Degrade the 8-bit image that lands on disk so that replay from the
    // written clean file is bit-exact.
    let clean = load_image(job.path)?.quantize8();
    let clean_rel = format!("clean/{stem}.png");
    write_png(&clean, &cfg.out.join(&clean_rel))?;
    let side = load_sidecars(args, &stem)?;
    let ctx = DegradeContext {
        assets: Some(assets),
        depth: side.depth.as_ref(),
        mask: side.mask.as_ref(),
        reflection: None,
    };
    let root = SeedTree::new(cfg.seed);
    let mut records = Vec::new();
    for &task in &cfg.tasks {
        if task == TaskKind::Haze && side.depth.is_none() {
            log::warn!("{stem}: skipping haze, no depth sidecar");
            continue;
        }
        let node = root.descend(&[job.index, task.index() as u64]);
        let severity = draw_severity(&node.child(0), cfg.severity_min, cfg.severity_max)?;
        let params = severity_to_params(task, severity, map, &node.child(1))?;
        let out = degrade(&clean, &params, &node.child(2), &ctx)?;
        let rel = degraded_rel(task, &stem);
        write_png(&out, &cfg.out.join(&rel))?;
        records.push(PairRecord {
            clean_path: clean_rel.clone(),
            degraded_path: rel,
            task,
            severity,
            seed_path: node,
            params: params.to_json(),
            origin: Origin::Synthetic,
        });
    }
    Ok(records)
}

fn check_range(cfg: &RunConfig) -> Result<()> {
    let (lo, hi) = (cfg.severity_min, cfg.severity_max);
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::Usage(format!("severity range [{lo}, {hi}] must lie within [0, 1]")));
    }
    if cfg.tasks.is_empty() {
        return Err(Error::Usage("no tasks requested".into()));
    }
    Ok(())
}

pub(super) fn cmd_synth(mut cfg: RunConfig, args: &SynthArgs) -> Result<()> {
    if let Some(m) = &args.replay {
        return replay(&cfg, args, m);
    }
    if let Some(t) = &args.tasks {
        cfg.tasks = t.clone();
    }
    if let Some(v) = args.severity_min {
        cfg.severity_min = v;
    }
    if let Some(v) = args.severity_max {
        cfg.severity_max = v;
    }
    check_range(&cfg)?;
    let input = args
        .input
        .as_deref()
        .ok_or_else(|| Error::Usage("synth needs --input".into()))?;
    let images = list_images(input)?;
    if images.is_empty() {
        return Err(Error::Usage(format!("no PNG or JPEG images in {}", input.display())));
    }
    let mut seen = HashSet::new();
    for p in &images {
        if !seen.insert(stem(p)) {
            return Err(Error::Usage(format!("duplicate image stem {}", stem(p))));
        }
    }
    let assets = load_assets(args)?;
    let map = SeverityMap::default();
    create_dir(&cfg.out)?;
    let per_image = images
        .par_iter()
        .enumerate()
        .map(|(i, path)| synth_image(&Job { index: i as u64, path }, &cfg, args, &assets, &map))
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = Manifest::new(per_image.into_iter().flatten().collect());
    manifest.canonical_sort();
    manifest.write(&cfg.out.join("manifest.jsonl"), &cfg.to_json())?;
    log::info!("wrote {} records to {}", manifest.len(), cfg.out.display());
    Ok(())
}

fn replay_record(r: &PairRecord, root: &Path, out: &Path, args: &SynthArgs, assets: &Assets) -> Result<()> {
    let clean = load_image(&root.join(&r.clean_path))?;
    let params = DegradeParams::from_json(&r.params)?;
    let side = load_sidecars(args, &stem(Path::new(&r.clean_path)))?;
    let ctx = DegradeContext {
        assets: Some(assets),
        depth: side.depth.as_ref(),
        mask: side.mask.as_ref(),
        reflection: None,
    };
    let img = degrade(&clean, &params, &r.seed_path.child(2), &ctx)?;
    write_png(&img, &out.join(&r.degraded_path))
}

/// Re-renders every record of `manifest_path` into the output directory.
fn replay(cfg: &RunConfig, args: &SynthArgs, manifest_path: &Path) -> Result<()> {
    let manifest = Manifest::read(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let assets = load_assets(args)?;
    create_dir(&cfg.out)?;
    manifest
        .records
        .par_iter()
        .map(|r| replay_record(r, root, &cfg.out, args, &assets))
        .collect::<Result<Vec<()>>>()?;
    log::info!("replayed {} records", manifest.len());
    Ok(())
}
