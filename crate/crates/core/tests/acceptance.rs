//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fail.

use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};

use degradekit::cli::run_from_args;
use degradekit::corpus::gen_scene;
use degradekit::curriculum::{default_stages, lr_at, mix_sample, task_sample};
use degradekit::degrade::filters::translate;
use degradekit::degrade::{apply_haze, apply_noise, degrade, severity_to_params, DegradeContext, NoiseSpec, SeverityMap};
use degradekit::filter::{run_filter_pipeline, skeleton_shift_filter, Backends, FilterConfig, GateKind, IngestedSimilarity, ShiftConfig, WatermarkVerdicts};
use degradekit::metrics::{
    aggregate, final_score, heuristic_degradation_score, kendall_tau_b, pearson, round3, spearman, EvalRecord, IngestedScorer,
};
use degradekit::patterns::DepthMap;
use degradekit::{DatasetStats, ImageBuffer, Manifest, Origin, PairRecord, SeedTree, Severity, TaskKind};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Cell {
    method: String,
    task: String,
    lps: f64,
    rs: f64,
    fs: f64,
}

fn cells() -> Vec<Cell> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/reference_cells.csv");
    std::fs::read_to_string(path)
        .expect("fixture")
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            Cell {
                method: f[0].into(),
                task: f[1].into(),
                lps: f[2].parse().unwrap(),
                rs: f[3].parse().unwrap(),
                fs: f[4].parse().unwrap(),
            }
        })
        .collect()
}

fn c1_fs_formula() -> Outcome {
    let task_cells: Vec<Cell> = cells().into_iter().filter(|c| c.task != "avg_total").collect();
    let mut worst = 0.0f64;
    for c in &task_cells {
        worst = worst.max((final_score(c.lps, c.rs).unwrap() - c.fs).abs());
    }
    let a = round3(final_score(0.429, 2.063).unwrap());
    let b = round3(final_score(0.468, 2.320).unwrap());
    check(
        task_cells.len() == 72 && worst <= 0.0015 && a == 0.236 && b == 0.247,
        format!("{} cells, max |err| {worst:.5}, anchors {a} {b}", task_cells.len()),
    )
}

fn c2_aggregation() -> Outcome {
    let all = cells();
    let board = |m: &str| {
        let recs: Vec<EvalRecord> = all
            .iter()
            .filter(|c| c.method == m && c.task != "avg_total")
            .map(|c| EvalRecord::from_measurements(&c.task, c.task.parse().unwrap(), c.lps, c.rs).unwrap())
            .collect();
        aggregate(m, &recs).unwrap()
    };
    let close = |v: f64, t: f64| (v - t).abs() <= 0.001;
    let nb = board("Nano Banana Pro").overall;
    let ours = board("ours").overall;
    check(
        close(nb.mean_lps, 0.413) && close(nb.mean_rs, 1.306) && close(nb.fs, 0.153)
            && close(ours.mean_lps, 0.445) && close(ours.mean_rs, 1.312) && close(ours.fs, 0.146),
        format!(
            "({:.4}, {:.4}, {:.4}) and ({:.4}, {:.4}, {:.4})",
            nb.mean_lps, nb.mean_rs, nb.fs, ours.mean_lps, ours.mean_rs, ours.fs
        ),
    )
}

fn c3_dataset_stats() -> Outcome {
    let rows: [(TaskKind, u64, u64); 9] = [
        (TaskKind::Rain, 84_968, 43_415),
        (TaskKind::Blur, 1_014_229, 13_458),
        (TaskKind::LowLight, 5_000, 7_005),
        (TaskKind::Haze, 103_971, 8_147),
        (TaskKind::Reflection, 68_227, 7_604),
        (TaskKind::Flare, 59_520, 7_956),
        (TaskKind::Moire, 99_085, 0),
        (TaskKind::Noise, 64_492, 0),
        (TaskKind::Compression, 68_000, 0),
    ];
    let sev = Severity::new(0.5).unwrap();
    // half the synthetic counts in one partial, the rest in another, to
    // exercise merging as the multi-manifest path does
    let (mut a, mut b) = (DatasetStats::default(), DatasetStats::default());
    for (t, s, r) in rows {
        a.add_count(t, Origin::Synthetic, sev, s / 2);
        b.add_count(t, Origin::Synthetic, sev, s - s / 2);
        b.add_count(t, Origin::Real, sev, r);
    }
    a.merge(&b);
    let t = a.totals;
    check(
        (t.synthetic, t.real, t.total) == (1_567_492, 87_585, 1_655_077),
        format!("{} / {} / {}", t.synthetic, t.real, t.total),
    )
}

fn c4_haze_exact() -> Outcome {
    let img = gen_scene(3, 64, 48).image;
    let mut worst = 0.0f64;
    for (d, beta, a) in [(0.3f32, 1.2, 0.9), (1.0, 0.5, 0.75), (0.0, 2.0, 1.0), (0.8, 3.0, 0.6)] {
        let depth = DepthMap::constant(64, 48, d);
        let out = apply_haze(&img, &depth, beta, a, None, 0.0).unwrap();
        let t = (-beta * d as f64).exp();
        for (o, j) in out.data().iter().zip(img.data()) {
            let want = *j as f64 * t + a * (1.0 - t);
            worst = worst.max((*o as f64 - want).abs());
        }
    }
    check(worst <= 1e-6, format!("max |err| {worst:.2e}"))
}

fn random_image(seed: u64, w: usize, h: usize, c: usize) -> ImageBuffer {
    use rand::Rng as _;
    let mut rng = SeedTree::new(seed).rng();
    let data = (0..w * h * c).map(|_| rng.gen::<f32>()).collect();
    ImageBuffer::from_vec(w, h, c, data).unwrap()
}

fn c5_identity_at_zero() -> Outcome {
    let map = SeverityMap::default();
    let mut worst = 0.0f32;
    let mut n = 0;
    for i in 0..20u64 {
        let scene = gen_scene(200 + i, 40 + (i as usize % 5) * 7, 36 + (i as usize % 3) * 9);
        let img = if i % 2 == 0 {
            scene.image.clone()
        } else {
            random_image(i, scene.image.width(), scene.image.height(), 3)
        };
        let ctx = DegradeContext {
            depth: Some(&scene.depth),
            mask: Some(&scene.mask),
            ..Default::default()
        };
        for task in TaskKind::ALL {
            let seed = SeedTree::new(i).child(task.index() as u64);
            let p = severity_to_params(task, Severity::ZERO, &map, &seed.child(1)).unwrap();
            let out = degrade(&img, &p, &seed.child(2), &ctx).unwrap();
            worst = worst.max(out.max_abs_diff(&img));
            n += 1;
        }
    }
    check(worst <= 1e-6, format!("{n} operator runs, max |diff| {worst:.2e}"))
}

fn synth_run(input: &Path, depth: &Path, out: &Path, workers: usize) -> i32 {
    run_from_args([
        "degradekit",
        "--seed",
        "77",
        "--workers",
        &workers.to_string(),
        "--out",
        out.to_str().unwrap(),
        "synth",
        "--input",
        input.to_str().unwrap(),
        "--depth-dir",
        depth.to_str().unwrap(),
    ])
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.join("degraded")];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

const DET_IMAGES: u64 = 50;
const DET_SIZE: usize = 128;

fn c6_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (input, depth) = (dir.path().join("in"), dir.path().join("depth"));
    std::fs::create_dir_all(&input).unwrap();
    std::fs::create_dir_all(&depth).unwrap();
    for i in 0..DET_IMAGES {
        let s = gen_scene(i, DET_SIZE, DET_SIZE);
        let name = format!("img{i:03}.png");
        std::fs::write(input.join(&name), degradekit::buffer::encode_png(&s.image).unwrap()).unwrap();
        std::fs::write(depth.join(&name), degradekit::buffer::encode_png16_gray(&s.depth.to_image()).unwrap()).unwrap();
    }
    let runs = [("a", 1), ("b", 1), ("c", 8)];
    let mut trees = Vec::new();
    let mut manifests = Vec::new();
    for (name, workers) in runs {
        let out = dir.path().join(name);
        let code = synth_run(&input, &depth, &out, workers);
        if code != 0 {
            return Err(format!("synth run {name} exited {code}"));
        }
        trees.push(tree_bytes(&out));
        manifests.push(std::fs::read(out.join("manifest.jsonl")).unwrap());
    }
    let records = Manifest::read(&dir.path().join("a/manifest.jsonl")).unwrap().len();
    check(
        records == (DET_IMAGES * 9) as usize && trees[0] == trees[1] && trees[0] == trees[2] && manifests[0] == manifests[1] && manifests[0] == manifests[2],
        format!("{records} records at {DET_SIZE}x{DET_SIZE}, workers 1/1/8 byte-identical: {}", trees[0] == trees[2] && manifests[0] == manifests[2]),
    )
}

fn c7_monotonicity() -> Outcome {
    let map = SeverityMap::default();
    let tasks = [TaskKind::Blur, TaskKind::Noise, TaskKind::LowLight, TaskKind::Haze, TaskKind::Compression];
    let mut parts = Vec::new();
    let mut ok = true;
    for task in tasks {
        let (mut sev, mut score) = (Vec::new(), Vec::new());
        for i in 0..20u64 {
            // held-out scenes, disjoint from the calibration set
            let scene = gen_scene(1000 + i, 128, 128);
            let ctx = DegradeContext {
                depth: Some(&scene.depth),
                ..Default::default()
            };
            for k in 0..10 {
                let s = k as f64 / 9.0;
                let seed = SeedTree::new(i).descend(&[task.index() as u64, k]);
                let p = severity_to_params(task, Severity::new(s).unwrap(), &map, &seed.child(1)).unwrap();
                let img = degrade(&scene.image, &p, &seed.child(2), &ctx).unwrap();
                sev.push(s);
                score.push(heuristic_degradation_score(&img, task).unwrap().value());
            }
        }
        let r = spearman(&sev, &score).unwrap();
        ok &= r <= -0.9;
        parts.push(format!("{}={r:.3}", task.name()));
    }
    check(ok, parts.join(" "))
}

fn c8_shift_accuracy() -> Outcome {
    use rand::Rng as _;
    let mut rng = SeedTree::new(8).rng();
    let cfg = ShiftConfig {
        max_shift: 15,
        ..ShiftConfig::default()
    };
    let mut hits = 0;
    for trial in 0..100u64 {
        let a = gen_scene(500 + trial, 256, 256).image;
        let (dx, dy) = (rng.gen_range(-15..=15), rng.gen_range(-15..=15));
        let b = translate(&a, dx, dy);
        let b = apply_noise(&b, &NoiseSpec::Gaussian { sigma: 0.05 }, None, &SeedTree::new(trial)).unwrap();
        let v = skeleton_shift_filter(&a, &b, &cfg).unwrap();
        let (ex, ey) = (v.measurements.get("dx"), v.measurements.get("dy"));
        if let (Some(ex), Some(ey)) = (ex, ey) {
            if (ex - dx as f64).abs() <= 1.0 && (ey - dy as f64).abs() <= 1.0 {
                hits += 1;
            }
        }
    }
    check(hits >= 95, format!("{hits}/100 within 1 px"))
}

fn c9_schedules() -> Outcome {
    let (a, b) = default_stages();
    let flat = (a.warmup_steps..=a.steps).all(|s| lr_at(&a, s).unwrap() == 1e-5);
    let end = lr_at(&b, 1500).unwrap();
    let mid_step = b.warmup_steps + (b.steps - b.warmup_steps) / 2;
    let mid = lr_at(&b, mid_step).unwrap();
    let tasks = task_sample(&SeedTree::new(91), 9000).unwrap();
    let worst_freq = TaskKind::ALL
        .iter()
        .map(|k| (tasks.iter().filter(|t| *t == k).count() as f64 / 9000.0 - 1.0 / 9.0).abs())
        .fold(0.0, f64::max);
    let origins = mix_sample(&b, &SeedTree::new(92), 10_000, false).unwrap();
    let real = origins.iter().filter(|o| **o == Origin::Real).count() as f64 / 10_000.0;
    check(
        flat && end == 0.0 && (mid - 5e-6).abs() <= 1e-12 && worst_freq <= 0.015 && (real - 0.8).abs() <= 0.015,
        format!("lr(1500)={end}, lr({mid_step})={mid:e}, task dev {worst_freq:.4}, real {real:.4}"),
    )
}

fn oracle_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (sx, sy) = ((x[i] - x[j]).signum() * (x[i] != x[j]) as u8 as f64, (y[i] - y[j]).signum() * (y[i] != y[j]) as u8 as f64);
            match (sx == 0.0, sy == 0.0) {
                (true, true) => {}
                (true, false) => tx += 1,
                (false, true) => ty += 1,
                _ if sx == sy => c += 1,
                _ => d += 1,
            }
        }
    }
    let den = ((c + d + tx) as f64 * (c + d + ty) as f64).sqrt();
    (den > 0.0).then(|| (c - d) as f64 / den)
}

fn oracle_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

fn oracle_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|a| {
            let below = v.iter().filter(|b| *b < a).count() as f64;
            let equal = v.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn compare(x: &[f64], y: &[f64], worst: &mut f64) -> bool {
    let pairs = [
        (kendall_tau_b(x, y).ok(), oracle_tau_b(x, y)),
        (spearman(x, y).ok(), oracle_pearson(&oracle_ranks(x), &oracle_ranks(y))),
        (pearson(x, y).ok(), oracle_pearson(x, y)),
    ];
    pairs.iter().all(|(got, want)| match (got, want) {
        (Some(g), Some(w)) => {
            *worst = worst.max((g - w).abs());
            (g - w).abs() <= 1e-12
        }
        (None, None) => true,
        _ => false,
    })
}

fn c10_correlation_oracle() -> Outcome {
    use rand::Rng as _;
    let mut cases = 0u64;
    let mut bad = 0u64;
    let mut worst = 0.0f64;
    // exhaustive over values 0..4 at n = 2..=4
    for n in 2..=4u32 {
        let total = 4u64.pow(n);
        for xi in 0..total {
            for yi in 0..total {
                let digits = |mut k: u64| -> Vec<f64> {
                    (0..n)
                        .map(|_| {
                            let d = k % 4;
                            k /= 4;
                            d as f64
                        })
                        .collect()
                };
                cases += 1;
                if !compare(&digits(xi), &digits(yi), &mut worst) {
                    bad += 1;
                }
            }
        }
    }
    // sampled with heavy ties at n = 5..=8
    let mut rng = SeedTree::new(10).rng();
    for _ in 0..20_000 {
        let n = rng.gen_range(5..=8);
        let k = rng.gen_range(2..=n as i64 + 1);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-k..k) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-k..k) as f64).collect();
        cases += 1;
        if !compare(&x, &y, &mut worst) {
            bad += 1;
        }
    }
    check(cases >= 10_000 && bad == 0, format!("{cases} cases, {bad} mismatches, max |err| {worst:.1e}"))
}

fn c11_instruction() -> Outcome {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_degradekit"))
        .args(["eval", "instruction", "--task", "haze"])
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    let anchors = [
        "the image is essentially clean",
        "<= 20% area",
        "20--50% area",
        "50--80% area",
        "> 80% area",
        "Degradation Score: <1--5>",
    ];
    let missing: Vec<&str> = anchors.iter().copied().filter(|a| !text.contains(a)).collect();
    check(out.status.success() && missing.is_empty(), format!("missing {missing:?}"))
}

fn c12_filter_partition() -> Outcome {
    let record = (
        prop::sample::select(TaskKind::ALL.to_vec()),
        1.0f64..=5.0,
        1.0f64..=5.0,
        -1.0f64..=1.0,
        any::<bool>(),
    );
    let strategy = (prop::collection::vec(record, 0..40), prop::sample::subsequence(vec![GateKind::Semantic, GateKind::Delta, GateKind::Watermark], 1..=3));
    let mut runner = TestRunner::new(PtConfig {
        cases: 1000,
        failure_persistence: None,
        ..PtConfig::default()
    });
    let result = runner.run(&strategy, |(recs, gates)| {
        let mut scorer = IngestedScorer::default();
        let mut sims = IngestedSimilarity::default();
        let mut marks = String::new();
        let mut records = Vec::new();
        for (i, (task, cs, ds, sim, wm)) in recs.iter().enumerate() {
            let r = PairRecord {
                clean_path: format!("clean/{i}.png"),
                degraded_path: format!("degraded/{}/{i}.png", task.name()),
                task: *task,
                severity: Severity::new(0.5).unwrap(),
                seed_path: SeedTree::new(0).child(i as u64),
                params: serde_json::Value::Null,
                origin: Origin::Real,
            };
            scorer.insert(&r.clean_path, *task, *cs);
            // some records lack a degraded score and hit the error path
            if i % 7 != 3 {
                scorer.insert(&r.degraded_path, *task, *ds);
            }
            sims.insert(r.id(), *sim);
            marks.push_str(&format!("{{\"id\":\"{}\",\"watermarked\":{wm}}}\n", r.id()));
            records.push(r);
        }
        let manifest = Manifest::new(records);
        let wm = WatermarkVerdicts::from_jsonl(&marks).unwrap();
        let cfg = FilterConfig {
            gates,
            ..FilterConfig::default()
        };
        let be = Backends {
            embedder: &sims,
            scorer: &scorer,
            watermarks: Some(&wm),
        };
        let out = run_filter_pipeline(&manifest, Path::new("."), &cfg, &be).unwrap();
        let kept: HashSet<&str> = out.kept.records.iter().map(|r| r.id()).collect();
        let rejected: HashSet<&str> = out.rejected.records.iter().map(|r| r.id()).collect();
        let input: HashSet<&str> = manifest.records.iter().map(|r| r.id()).collect();
        prop_assert_eq!(out.kept.len() + out.rejected.len(), manifest.len());
        prop_assert!(kept.is_disjoint(&rejected));
        prop_assert_eq!(kept.union(&rejected).copied().collect::<HashSet<_>>(), input);
        Ok(())
    });
    check(result.is_ok(), match result {
        Ok(()) => "1000 random manifests".into(),
        Err(e) => e.to_string(),
    })
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("FS formula", c1_fs_formula),
        ("aggregation", c2_aggregation),
        ("dataset stats", c3_dataset_stats),
        ("haze analytic", c4_haze_exact),
        ("identity at zero", c5_identity_at_zero),
        ("determinism", c6_determinism),
        ("severity monotonicity", c7_monotonicity),
        ("shift accuracy", c8_shift_accuracy),
        ("schedules", c9_schedules),
        ("correlation oracle", c10_correlation_oracle),
        ("instruction fidelity", c11_instruction),
        ("filter partition", c12_filter_partition),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("criterion {:>2} {name}: PASS ({d}) [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({d}) [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
