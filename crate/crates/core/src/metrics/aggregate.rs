//! Per-task and overall aggregation, and leaderboard rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::TaskKind;

use super::score::{final_score, EvalRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: TaskKind,
    pub n: usize,
    pub mean_lps: f64,
    pub mean_rs: f64,
    /// FS composed from the two means.
    pub fs_of_means: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverallRow {
    pub n_tasks: usize,
    pub mean_lps: f64,
    pub mean_rs: f64,
    pub fs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodBoard {
    pub method: String,
    /// Tasks with at least one record, in [`TaskKind::ALL`] order.
    pub tasks: Vec<TaskReport>,
    pub overall: OverallRow,
}

impl MethodBoard {
    pub fn task(&self, task: TaskKind) -> Option<&TaskReport> {
        self.tasks.iter().find(|r| r.task == task)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub methods: Vec<MethodBoard>,
}

/// Averages records per task, then averages the task-level means for the
/// overall row. Overall FS is composed from the averaged LPS and RS.
pub fn aggregate(method: &str, records: &[EvalRecord]) -> Result<MethodBoard> {
    if records.is_empty() {
        return Err(Error::Param(format!("no records for method {method}")));
    }
    let mut tasks = Vec::new();
    for task in TaskKind::ALL {
        let rs: Vec<&EvalRecord> = records.iter().filter(|r| r.task == task).collect();
        if rs.is_empty() {
            log::warn!("{method}: no records for {task}, omitted from overall");
            continue;
        }
        let n = rs.len();
        let mean_lps = rs.iter().map(|r| r.lps).sum::<f64>() / n as f64;
        let mean_rs = rs.iter().map(|r| r.rs).sum::<f64>() / n as f64;
        tasks.push(TaskReport {
            task,
            n,
            mean_lps,
            mean_rs,
            fs_of_means: final_score(mean_lps, mean_rs)?,
        });
    }
    let k = tasks.len() as f64;
    let mean_lps = tasks.iter().map(|t| t.mean_lps).sum::<f64>() / k;
    let mean_rs = tasks.iter().map(|t| t.mean_rs).sum::<f64>() / k;
    Ok(MethodBoard {
        method: method.to_string(),
        overall: OverallRow {
            n_tasks: tasks.len(),
            mean_lps,
            mean_rs,
            fs: final_score(mean_lps, mean_rs)?,
        },
        tasks,
    })
}

/// Rounds half-to-even at 3 decimals. Products such as `0.2355` that land a
/// hair off the midpoint in binary are treated as exact ties.
pub fn round3(v: f64) -> f64 {
    let s = v * 1000.0;
    let frac = s - s.floor();
    let r = if (frac - 0.5).abs() < 1e-7 {
        let f = s.floor();
        if f.rem_euclid(2.0) == 0.0 {
            f
        } else {
            f + 1.0
        }
    } else {
        s.round()
    };
    let out = r / 1000.0;
    if out == 0.0 {
        0.0
    } else {
        out
    }
}

pub fn fmt3(v: f64) -> String {
    format!("{:.3}", round3(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoardFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for BoardFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            _ => Err(Error::Usage(format!("unknown leaderboard format {s:?}"))),
        }
    }
}

pub const OVERALL_LABEL: &str = "avg_total";

pub fn emit_leaderboard(board: &Leaderboard, format: BoardFormat) -> String {
    match format {
        BoardFormat::Csv => emit_csv(board),
        BoardFormat::Markdown => emit_markdown(board),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn emit_csv(board: &Leaderboard) -> String {
    let mut out = String::from("method,task,lps,rs,fs\n");
    for m in &board.methods {
        let name = csv_field(&m.method);
        for t in &m.tasks {
            let _ = writeln!(out, "{name},{},{},{},{}", t.task, fmt3(t.mean_lps), fmt3(t.mean_rs), fmt3(t.fs_of_means));
        }
        let o = &m.overall;
        let _ = writeln!(out, "{name},{OVERALL_LABEL},{},{},{}", fmt3(o.mean_lps), fmt3(o.mean_rs), fmt3(o.fs));
    }
    out
}

fn emit_markdown(board: &Leaderboard) -> String {
    let tasks: Vec<TaskKind> = TaskKind::ALL
        .into_iter()
        .filter(|t| board.methods.iter().any(|m| m.task(*t).is_some()))
        .collect();
    let mut header = vec!["Method".to_string()];
    for t in &tasks {
        for col in ["LPS↓", "RS↑", "FS↑"] {
            header.push(format!("{} {col}", t.name()));
        }
    }
    for col in ["LPS↓", "RS↑", "FS↑"] {
        header.push(format!("Avg Total {col}"));
    }
    let mut out = format!("| {} |\n", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for m in &board.methods {
        let mut cells = vec![m.method.replace('|', "\\|")];
        for t in &tasks {
            match m.task(*t) {
                Some(r) => cells.extend([fmt3(r.mean_lps), fmt3(r.mean_rs), fmt3(r.fs_of_means)]),
                None => cells.extend(["-".to_string(), "-".to_string(), "-".to_string()]),
            }
        }
        let o = &m.overall;
        cells.extend([fmt3(o.mean_lps), fmt3(o.mean_rs), fmt3(o.fs)]);
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out
}
