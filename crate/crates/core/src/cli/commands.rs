use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::buffer::{encode_png, load_image, write_atomic};
use crate::curriculum::{default_stage, lr_csv, sample_draws};
use crate::error::{Error, Result};
use crate::filter::{
    run_filter_pipeline, Backends, EmbedderBackend, GateKind, IngestedSimilarity, NullEmbedder, WatermarkVerdicts,
};
use crate::manifest::{DatasetStats, Manifest};
use crate::metrics::{
    aggregate, emit_leaderboard, perceptual_distance, BoardFormat, DistanceBackend, EvalRecord, HeuristicScorer,
    IngestedDistance, IngestedScorer, Leaderboard, ReferenceDistance, ScorerBackend,
};
use crate::patterns::{gen_flare_sprite, gen_haze_texture, gen_moire_pattern, gen_rain_streaks, FlareKind, MoireParams, MoireScale, RainStreakParams};
use crate::seed::SeedTree;
use crate::task::TaskKind;

use super::synth::{list_images, stem};
use super::{create_dir, EvalArgs, FilterArgs, PatternArgs, RunConfig, ScheduleCommand, StatsArgs};

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

fn scorer(scores: &Option<PathBuf>) -> Result<Box<dyn ScorerBackend>> {
    Ok(match scores {
        Some(p) => Box::new(IngestedScorer::load(p)?),
        None => Box::new(HeuristicScorer),
    })
}

fn parse_gates(s: &str) -> Result<Vec<GateKind>> {
    let gates = s
        .split(',')
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(|g| {
            serde_json::from_value(serde_json::Value::String(g.to_string()))
                .map_err(|_| Error::Usage(format!("unknown gate {g:?}")))
        })
        .collect::<Result<Vec<GateKind>>>()?;
    if gates.is_empty() {
        return Err(Error::Usage("--gates needs at least one gate".into()));
    }
    Ok(gates)
}

#[derive(Serialize)]
struct FilterSummary {
    input: usize,
    kept: usize,
    rejected: usize,
    reasons: BTreeMap<String, usize>,
}

/// Rewrites relative record paths so they resolve from `out` instead of `root`.
fn rebase(m: &mut Manifest, root: &Path) -> Result<()> {
    let abs = std::path::absolute(root).map_err(|e| Error::io(root, e))?;
    let join = |p: &str| {
        if Path::new(p).is_absolute() {
            p.to_string()
        } else {
            abs.join(p).to_string_lossy().into_owned()
        }
    };
    for r in &mut m.records {
        r.clean_path = join(&r.clean_path);
        r.degraded_path = join(&r.degraded_path);
    }
    Ok(())
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

pub(super) fn cmd_filter(mut cfg: RunConfig, args: &FilterArgs) -> Result<()> {
    if let Some(g) = &args.gates {
        cfg.filter.gates = parse_gates(g)?;
    }
    if cfg.filter.gates.is_empty() {
        return Err(Error::Usage("filter needs at least one gate".into()));
    }
    if let Some(v) = args.similarity {
        cfg.filter.similarity = v;
    }
    if let Some(v) = args.min_delta {
        cfg.filter.min_delta = v;
    }
    if let Some(v) = args.max_shift {
        cfg.filter.shift.max_shift = v;
    }
    if let Some(v) = args.search_radius {
        cfg.filter.shift.search_radius = v;
    }
    let gates = &cfg.filter.gates;
    let embedder: Box<dyn EmbedderBackend> = match (&args.similarity_file, gates.contains(&GateKind::Semantic)) {
        (Some(p), _) => Box::new(IngestedSimilarity::load(p)?),
        (None, true) => return Err(Error::Usage("the semantic gate needs --similarity-file".into())),
        (None, false) => Box::new(NullEmbedder),
    };
    let watermarks = match (&args.watermarks, gates.contains(&GateKind::Watermark)) {
        (Some(p), _) => Some(WatermarkVerdicts::load(p)?),
        (None, true) => return Err(Error::Usage("the watermark gate needs --watermarks".into())),
        (None, false) => None,
    };
    let scorer = scorer(&args.scores)?;
    let manifest = Manifest::read(&args.manifest)?;
    let root = args.manifest.parent().unwrap_or(Path::new("."));
    let backends = Backends {
        embedder: embedder.as_ref(),
        scorer: scorer.as_ref(),
        watermarks: watermarks.as_ref(),
    };
    let mut outcome = run_filter_pipeline(&manifest, root, &cfg.filter, &backends)?;
    create_dir(&cfg.out)?;
    if !same_dir(root, &cfg.out) {
        rebase(&mut outcome.kept, root)?;
        rebase(&mut outcome.rejected, root)?;
    }
    let echo = cfg.to_json();
    outcome.kept.write(&cfg.out.join("kept.jsonl"), &echo)?;
    outcome.rejected.write(&cfg.out.join("rejected.jsonl"), &echo)?;
    write_text(&cfg.out.join("filter_report.jsonl"), &outcome.report_jsonl()?)?;
    let mut reasons = BTreeMap::new();
    for l in &outcome.report {
        *reasons.entry(l.reason.name().to_string()).or_insert(0) += 1;
    }
    let summary = FilterSummary {
        input: manifest.len(),
        kept: outcome.kept.len(),
        rejected: outcome.rejected.len(),
        reasons,
    };
    write_text(&cfg.out.join("filter_summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    log::info!("kept {} of {}", summary.kept, summary.input);
    Ok(())
}

#[derive(Deserialize)]
struct MeasurementLine {
    method: String,
    task: TaskKind,
    lps: f64,
    rs: f64,
}

fn board_from_measurements(path: &Path) -> Result<Leaderboard> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut by_method: HashMap<String, Vec<EvalRecord>> = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let l: MeasurementLine =
            serde_json::from_str(line).map_err(|e| Error::Format(format!("measurements line {}: {e}", n + 1)))?;
        let rec = EvalRecord::from_measurements(format!("{}/{}", l.method, l.task), l.task, l.lps, l.rs)?;
        if !by_method.contains_key(&l.method) {
            order.push(l.method.clone());
        }
        by_method.entry(l.method).or_default().push(rec);
    }
    let methods = order
        .iter()
        .map(|m| aggregate(m, &by_method[m]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Leaderboard { methods })
}

/// `(task, stem) -> path` for images under `<dir>/<task>/`.
fn index_dir(dir: &Path) -> Result<BTreeMap<(TaskKind, String), PathBuf>> {
    let mut out = BTreeMap::new();
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for sub in subdirs {
        let name = sub.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let Ok(task) = name.parse::<TaskKind>() else {
            log::warn!("ignoring {}: not a task directory", sub.display());
            continue;
        };
        for p in list_images(&sub)? {
            out.insert((task, stem(&p)), p);
        }
    }
    Ok(out)
}

struct Pair {
    task: TaskKind,
    stem: String,
    degraded: PathBuf,
    restored: PathBuf,
}

fn eval_pair(p: &Pair, scorer: &dyn ScorerBackend, dist: &dyn DistanceBackend) -> Result<EvalRecord> {
    let did = format!("degraded/{}/{}", p.task.name(), p.stem);
    let rid = format!("restored/{}/{}", p.task.name(), p.stem);
    let d = load_image(&p.degraded)?;
    let r = load_image(&p.restored)?;
    let ds = scorer.score(&did, &d, p.task)?;
    let rsc = scorer.score(&rid, &r, p.task)?;
    let lps = perceptual_distance((&did, &d), (&rid, &r), dist)?;
    EvalRecord::new(format!("{}/{}", p.task.name(), p.stem), p.task, ds, rsc, lps)
}

fn eval_images(args: &EvalArgs, degraded: &Path, restored: &Path) -> Result<(Leaderboard, Vec<EvalRecord>)> {
    let scorer = scorer(&args.scores)?;
    let dist: Box<dyn DistanceBackend> = match &args.distances {
        Some(p) => Box::new(IngestedDistance::load(p)?),
        None => Box::new(ReferenceDistance),
    };
    let deg = index_dir(degraded)?;
    let mut res = index_dir(restored)?;
    let mut pairs = Vec::new();
    for ((task, s), path) in deg {
        match res.remove(&(task, s.clone())) {
            Some(r) => pairs.push(Pair {
                task,
                stem: s,
                degraded: path,
                restored: r,
            }),
            None => log::warn!("unmatched degraded image {}/{s}, excluded", task.name()),
        }
    }
    for (task, s) in res.keys() {
        log::warn!("unmatched restored image {}/{s}, excluded", task.name());
    }
    let results: Vec<(&Pair, Result<EvalRecord>)> = pairs
        .par_iter()
        .map(|p| (p, eval_pair(p, scorer.as_ref(), dist.as_ref())))
        .collect();
    let mut records = Vec::new();
    for (p, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e @ (Error::Unsupported(_) | Error::Lookup(_))) => {
                log::warn!("{}/{}: {e}, excluded", p.task.name(), p.stem)
            }
            Err(e) => return Err(e),
        }
    }
    let board = Leaderboard {
        methods: vec![aggregate(&args.method, &records)?],
    };
    Ok((board, records))
}

pub(super) fn cmd_eval(cfg: &RunConfig, args: &EvalArgs) -> Result<()> {
    let (board, records) = match (&args.measurements, &args.degraded, &args.restored) {
        (Some(m), _, _) => (board_from_measurements(m)?, Vec::new()),
        (None, Some(d), Some(r)) => eval_images(args, d, r)?,
        _ => return Err(Error::Usage("eval needs --degraded and --restored, or --measurements".into())),
    };
    create_dir(&cfg.out)?;
    write_text(&cfg.out.join("leaderboard.csv"), &emit_leaderboard(&board, BoardFormat::Csv))?;
    write_text(&cfg.out.join("leaderboard.md"), &emit_leaderboard(&board, BoardFormat::Markdown))?;
    if !records.is_empty() {
        let mut text = String::new();
        for r in &records {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        write_text(&cfg.out.join("records.jsonl"), &text)?;
    }
    print!("{}", emit_leaderboard(&board, BoardFormat::Markdown));
    Ok(())
}

pub(super) fn cmd_stats(cfg: &RunConfig, args: &StatsArgs) -> Result<()> {
    let mut stats = DatasetStats::default();
    for m in &args.manifests {
        stats.merge(&DatasetStats::from_jsonl_file(m)?);
    }
    print!("{}", stats.render_table());
    if args.json {
        create_dir(&cfg.out)?;
        write_text(&cfg.out.join("stats.json"), &serde_json::to_string_pretty(&stats)?)?;
    }
    Ok(())
}

pub(super) fn cmd_schedule(cfg: &RunConfig, cmd: &ScheduleCommand) -> Result<()> {
    create_dir(&cfg.out)?;
    match *cmd {
        ScheduleCommand::Emit { stage } => {
            let s = default_stage(stage)?;
            write_text(&cfg.out.join("lr.csv"), &lr_csv(&s)?)
        }
        ScheduleCommand::Sample { stage, n, ramp } => {
            let s = default_stage(stage)?;
            let log = sample_draws(&s, &SeedTree::new(cfg.seed), n, ramp)?;
            write_text(&cfg.out.join("draws.jsonl"), &log.to_jsonl()?)
        }
    }
}

fn rain_params(seed: &SeedTree) -> RainStreakParams {
    let mut rng = seed.rng();
    RainStreakParams {
        density: rng.gen_range(0.5..3.0),
        length: rng.gen_range(8.0..30.0),
        angle: rng.gen_range(-0.3..0.3),
        width: rng.gen_range(1.0..2.0),
        wind_jitter: rng.gen_range(0.0..0.1),
    }
}

pub(super) fn cmd_patterns(cfg: &RunConfig, args: &PatternArgs) -> Result<()> {
    if args.count == 0 || args.size < 8 {
        return Err(Error::Usage("patterns need --count >= 1 and --size >= 8".into()));
    }
    create_dir(&cfg.out)?;
    let root = SeedTree::new(cfg.seed);
    let size = args.size;
    (0..args.count)
        .into_par_iter()
        .map(|id| {
            let node = root.child(id as u64);
            let img = match args.kind.as_str() {
                "moire" => gen_moire_pattern(&MoireParams::random(MoireScale::ALL[id as usize % 3], &node), size, size)?,
                "flare" => {
                    let mut rng = node.rng();
                    gen_flare_sprite(FlareKind::ALL[id as usize % 3], 1.0, rng.gen_range(-1.0..1.0), rng.gen(), size)
                }
                "rain" => gen_rain_streaks(&rain_params(&node.child(0)), size, size, &node.child(1))?.image,
                "haze" => gen_haze_texture(size, size, 4, &node)?,
                other => return Err(Error::Usage(format!("unknown pattern kind {other}"))),
            };
            let path = cfg.out.join(format!("{}_{id:05}.png", args.kind));
            write_atomic(&path, &encode_png(&img)?)
        })
        .collect::<Result<Vec<()>>>()?;
    Ok(())
}
