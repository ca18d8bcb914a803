//! Pair records, JSON Lines manifests and dataset statistics.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::buffer::write_atomic;
use crate::error::{Error, Result};
use crate::seed::SeedTree;
use crate::task::{Origin, Severity, TaskKind};

/// Provenance of one clean/degraded pair. Serializes with exactly the keys
/// `clean_path, degraded_path, task, severity, seed_path, params, origin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub clean_path: String,
    pub degraded_path: String,
    pub task: TaskKind,
    pub severity: Severity,
    #[serde(with = "seed_as_string")]
    pub seed_path: SeedTree,
    pub params: serde_json::Value,
    pub origin: Origin,
}

mod seed_as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::seed::SeedTree;

    pub fn serialize<S: Serializer>(t: &SeedTree, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(t)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SeedTree, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl PairRecord {
    /// Identifier used in filter reports and external score files.
    pub fn id(&self) -> &str {
        &self.degraded_path
    }

    /// Ordering key for canonical manifests.
    fn sort_key(&self) -> (&str, &str, TaskKind) {
        (&self.degraded_path, &self.clean_path, self.task)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub records: Vec<PairRecord>,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub tool_version: String,
}

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Run metadata written beside a manifest (`<manifest>.meta.json`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestMeta {
    pub created: u64,
    pub tool_version: String,
    #[serde(default)]
    pub config: serde_json::Value,
}

pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Manifest {
    pub fn new(records: Vec<PairRecord>) -> Self {
        Manifest {
            records,
            created: now_unix(),
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks that degraded paths are unique.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.degraded_path.as_str()) {
                return Err(Error::Format(format!("duplicate record path {}", r.degraded_path)));
            }
        }
        Ok(())
    }

    /// Sorts records into canonical order so that output never depends on
    /// worker scheduling.
    pub fn canonical_sort(&mut self) {
        self.records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: PairRecord = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("manifest line {}: {e}", n + 1)))?;
            records.push(r);
        }
        let m = Manifest {
            records,
            created: 0,
            tool_version: String::new(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn meta_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".meta.json");
        PathBuf::from(p)
    }

    /// Writes the JSONL body (write-then-rename) plus a metadata sidecar
    /// echoing `config`.
    pub fn write(&self, path: &Path, config: &serde_json::Value) -> Result<()> {
        self.validate()?;
        write_atomic(path, self.to_jsonl()?.as_bytes())?;
        let meta = ManifestMeta {
            created: self.created,
            tool_version: self.tool_version.clone(),
            config: config.clone(),
        };
        write_atomic(&Self::meta_path(path), serde_json::to_string_pretty(&meta)?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m = Self::from_jsonl(&text)?;
        if let Ok(meta) = std::fs::read_to_string(Self::meta_path(path)) {
            if let Ok(meta) = serde_json::from_str::<ManifestMeta>(&meta) {
                m.created = meta.created;
                m.tool_version = meta.tool_version;
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OriginCounts {
    pub synthetic: u64,
    pub real: u64,
    pub total: u64,
}

impl OriginCounts {
    fn add(&mut self, origin: Origin, n: u64) {
        match origin {
            Origin::Synthetic => self.synthetic += n,
            Origin::Real => self.real += n,
        }
        self.total += n;
    }
}

pub const SEVERITY_BINS: usize = 10;

/// Per-task and per-origin record counts plus severity histograms.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DatasetStats {
    pub per_task: BTreeMap<TaskKind, OriginCounts>,
    pub totals: OriginCounts,
    pub severity_histograms: BTreeMap<TaskKind, [u64; SEVERITY_BINS]>,
}

impl DatasetStats {
    pub fn add(&mut self, record: &PairRecord) {
        self.add_count(record.task, record.origin, record.severity, 1);
    }

    /// Adds `n` records sharing one (task, origin, severity).
    pub fn add_count(&mut self, task: TaskKind, origin: Origin, severity: Severity, n: u64) {
        self.per_task.entry(task).or_default().add(origin, n);
        self.totals.add(origin, n);
        let bin = ((severity.value() * SEVERITY_BINS as f64) as usize).min(SEVERITY_BINS - 1);
        self.severity_histograms.entry(task).or_insert([0; SEVERITY_BINS])[bin] += n;
    }

    pub fn merge(&mut self, other: &DatasetStats) {
        for (&task, c) in &other.per_task {
            let e = self.per_task.entry(task).or_default();
            e.synthetic += c.synthetic;
            e.real += c.real;
            e.total += c.total;
        }
        self.totals.synthetic += other.totals.synthetic;
        self.totals.real += other.totals.real;
        self.totals.total += other.totals.total;
        for (&task, h) in &other.severity_histograms {
            let e = self.severity_histograms.entry(task).or_insert([0; SEVERITY_BINS]);
            e.iter_mut().zip(h).for_each(|(a, b)| *a += b);
        }
    }

    pub fn task(&self, task: TaskKind) -> OriginCounts {
        self.per_task.get(&task).copied().unwrap_or_default()
    }

    /// Streams a JSONL manifest without holding every record in memory.
    pub fn from_jsonl_file(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut stats = DatasetStats::default();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let r: PairRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("{} line {}: {e}", path.display(), n + 1)))?;
            stats.add(&r);
        }
        Ok(stats)
    }

    /// Fixed-width text report: one row per task, then totals.
    pub fn render_table(&self) -> String {
        let mut out = format!("{:<12} {:>12} {:>10} {:>12}\n", "task", "synthetic", "real", "total");
        for t in TaskKind::ALL {
            let c = self.task(t);
            out.push_str(&format!("{:<12} {:>12} {:>10} {:>12}\n", t.name(), c.synthetic, c.real, c.total));
        }
        let c = self.totals;
        out.push_str(&format!("{:<12} {:>12} {:>10} {:>12}\n", "total", c.synthetic, c.real, c.total));
        out
    }
}

pub fn dataset_stats(manifest: &Manifest) -> DatasetStats {
    let mut stats = DatasetStats::default();
    manifest.records.iter().for_each(|r| stats.add(r));
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(name: &str, task: TaskKind, origin: Origin) -> PairRecord {
        PairRecord {
            clean_path: format!("clean/{name}.png"),
            degraded_path: format!("degraded/{}/{name}.png", task.name()),
            task,
            severity: Severity::new(0.5).unwrap(),
            seed_path: SeedTree::new(1).child(2),
            params: serde_json::json!({"blur": {"sigma": 1.0}}),
            origin,
        }
    }

    #[test]
    fn record_keys_are_exact() {
        let r = record("a", TaskKind::Rain, Origin::Real);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        let mut expected = vec![
            "clean_path",
            "degraded_path",
            "task",
            "severity",
            "seed_path",
            "params",
            "origin",
        ];
        expected.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, expected);
        let line = serde_json::to_string(&r).unwrap();
        assert!(line.starts_with("{\"clean_path\""));
        assert!(line.contains("\"seed_path\":\"1/2\""));
    }

    #[test]
    fn jsonl_round_trip_and_duplicate_rejection() {
        let m = Manifest::new(vec![
            record("a", TaskKind::Blur, Origin::Synthetic),
            record("b", TaskKind::Haze, Origin::Real),
        ]);
        let back = Manifest::from_jsonl(&m.to_jsonl().unwrap()).unwrap();
        assert_eq!(back.records, m.records);
        let dup = Manifest::new(vec![
            record("a", TaskKind::Blur, Origin::Synthetic),
            record("a", TaskKind::Blur, Origin::Real),
        ]);
        assert!(Manifest::from_jsonl(&dup.to_jsonl().unwrap()).is_err());
    }

    #[test]
    fn rain_row_from_counts() {
        let mut s = DatasetStats::default();
        s.add_count(TaskKind::Rain, Origin::Synthetic, Severity::MAX, 84_968);
        s.add_count(TaskKind::Rain, Origin::Real, Severity::ZERO, 43_415);
        assert_eq!(s.task(TaskKind::Rain).total, 128_383);
    }

    #[test]
    fn empty_manifest_has_zero_counts() {
        let s = dataset_stats(&Manifest::default());
        assert_eq!(s.totals, OriginCounts::default());
        assert!(TaskKind::ALL.iter().all(|&t| s.task(t).total == 0));
    }

    #[test]
    fn stats_ignore_record_order() {
        let mut recs: Vec<_> = (0..30)
            .map(|i| {
                let t = TaskKind::ALL[i % 9];
                let o = if i % 4 == 0 { Origin::Real } else { Origin::Synthetic };
                record(&format!("r{i}"), t, o)
            })
            .collect();
        let a = dataset_stats(&Manifest::new(recs.clone()));
        recs.reverse();
        recs.swap(3, 17);
        let b = dataset_stats(&Manifest::new(recs));
        assert_eq!(a, b);
        assert_eq!(a.totals.total, 30);
        assert_eq!(a.totals.synthetic + a.totals.real, 30);
    }
}
