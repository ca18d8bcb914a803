//! Command-line surface. `main.rs` only calls [`main_entry`].

mod commands;
mod synth;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::task::TaskKind;

#[derive(Parser, Debug)]
#[command(name = "degradekit", version, about = "Degradation synthesis, pair filtering and restoration benchmarking")]
pub struct Cli {
    /// Root seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// TOML run config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize degraded pairs from a directory of clean images.
    Synth(SynthArgs),
    /// Generate procedural overlay banks.
    Patterns {
        #[command(subcommand)]
        command: PatternsCommand,
    },
    /// Split a manifest into kept and rejected pairs.
    Filter(FilterArgs),
    /// Score restored images and emit a leaderboard.
    Eval(EvalCommand),
    /// Count records per task and origin.
    Stats(StatsArgs),
    /// Learning-rate curves and training draws.
    Schedule {
        #[command(subcommand)]
        command: ScheduleCommand,
    },
}

#[derive(Args, Debug, Default)]
pub struct SynthArgs {
    /// Directory of clean PNG/JPEG images.
    #[arg(long, required_unless_present = "replay")]
    pub input: Option<PathBuf>,
    /// Comma-separated task names (default: all nine).
    #[arg(long, value_delimiter = ',')]
    pub tasks: Option<Vec<TaskKind>>,
    #[arg(long)]
    pub severity_min: Option<f64>,
    #[arg(long)]
    pub severity_max: Option<f64>,
    /// Depth sidecars named `<stem>.png`.
    #[arg(long)]
    pub depth_dir: Option<PathBuf>,
    /// Segmentation sidecars named `<stem>.png`.
    #[arg(long)]
    pub mask_dir: Option<PathBuf>,
    #[arg(long)]
    pub moire_bank: Option<PathBuf>,
    #[arg(long)]
    pub flare_bank: Option<PathBuf>,
    #[arg(long)]
    pub rain_bank: Option<PathBuf>,
    #[arg(long)]
    pub haze_bank: Option<PathBuf>,
    /// Re-render the degraded images of an existing manifest from its
    /// recorded parameters.
    #[arg(long, conflicts_with = "input")]
    pub replay: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum PatternsCommand {
    Gen(PatternArgs),
}

#[derive(Args, Debug)]
pub struct PatternArgs {
    #[arg(long, value_parser = ["moire", "flare", "rain", "haze"])]
    pub kind: String,
    #[arg(long, default_value_t = 16)]
    pub count: u32,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated gates from semantic, delta, shift, watermark.
    #[arg(long)]
    pub gates: Option<String>,
    /// Degradation scores as JSON Lines `{id, task, score}`; without it the
    /// heuristic scorer runs on the pixels.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Image–prompt similarities as JSON Lines `{id, score}`.
    #[arg(long)]
    pub similarity_file: Option<PathBuf>,
    /// Watermark verdicts as JSON Lines `{id, watermarked}`.
    #[arg(long)]
    pub watermarks: Option<PathBuf>,
    #[arg(long)]
    pub similarity: Option<f64>,
    #[arg(long)]
    pub min_delta: Option<f64>,
    #[arg(long)]
    pub max_shift: Option<usize>,
    #[arg(long)]
    pub search_radius: Option<usize>,
}

#[derive(Args, Debug)]
#[command(args_conflicts_with_subcommands = true)]
pub struct EvalCommand {
    #[command(subcommand)]
    pub command: Option<EvalSub>,
    #[command(flatten)]
    pub args: EvalArgs,
}

#[derive(Subcommand, Debug)]
pub enum EvalSub {
    /// Print the degradation-scoring instruction for a task.
    Instruction {
        #[arg(long)]
        task: TaskKind,
    },
}

#[derive(Args, Debug, Default)]
pub struct EvalArgs {
    /// Degraded images laid out as `<task>/<stem>.<ext>`.
    #[arg(long, requires = "restored")]
    pub degraded: Option<PathBuf>,
    /// Restored images with the same layout.
    #[arg(long, requires = "degraded")]
    pub restored: Option<PathBuf>,
    #[arg(long, default_value = "method")]
    pub method: String,
    /// Degradation scores as JSON Lines `{id, task, score}`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Distances as JSON Lines `{id_a, id_b, dist}`.
    #[arg(long)]
    pub distances: Option<PathBuf>,
    /// Per-task measurements as JSON Lines `{method, task, lps, rs}`.
    #[arg(long, conflicts_with_all = ["degraded", "restored"])]
    pub measurements: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(required = true)]
    pub manifests: Vec<PathBuf>,
    /// Also write `stats.json` to the output directory.
    #[arg(long)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum ScheduleCommand {
    /// Write `lr.csv` for a stage.
    Emit {
        #[arg(long)]
        stage: u8,
    },
    /// Write `draws.jsonl` with sampled tasks and origins.
    Sample {
        #[arg(long)]
        stage: u8,
        #[arg(short = 'n', long)]
        n: u64,
        /// Move the synthetic share from 1 to the stage ratio.
        #[arg(long)]
        ramp: bool,
    },
}

/// Effective settings after merging the config file and flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub severity_min: f64,
    pub severity_max: f64,
    pub tasks: Vec<TaskKind>,
    pub filter: FilterConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: None,
            out: PathBuf::from("out"),
            severity_min: 0.25,
            severity_max: 1.0,
            tasks: TaskKind::ALL.to_vec(),
            filter: FilterConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn resolve(cli: &Cli) -> Result<Self> {
        let mut cfg = match &cli.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if let Some(w) = cli.workers {
            cfg.workers = Some(w);
        }
        if let Some(o) = &cli.out {
            cfg.out = o.clone();
        }
        if cfg.workers == Some(0) {
            return Err(Error::Usage("--workers must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn dispatch(cli: Cli) -> Result<()> {
    let cfg = RunConfig::resolve(&cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synth(args) => synth::cmd_synth(cfg, &args),
        Command::Patterns {
            command: PatternsCommand::Gen(args),
        } => commands::cmd_patterns(&cfg, &args),
        Command::Filter(args) => commands::cmd_filter(cfg, &args),
        Command::Eval(EvalCommand {
            command: Some(EvalSub::Instruction { task }),
            ..
        }) => {
            print!("{}", crate::metrics::render_scoring_instruction(task));
            Ok(())
        }
        Command::Eval(EvalCommand { command: None, args }) => commands::cmd_eval(&cfg, &args),
        Command::Stats(args) => commands::cmd_stats(&cfg, &args),
        Command::Schedule { command } => commands::cmd_schedule(&cfg, &command),
    })
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_entry() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    run_from_args(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "seed = 5\nseverity_min = 0.5\n[filter]\nmin_delta = 2.0\n").unwrap();
        let cli = Cli::try_parse_from(["degradekit", "--config", p.to_str().unwrap(), "--seed", "9", "stats", "m.jsonl"]).unwrap();
        let cfg = RunConfig::resolve(&cli).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.severity_min, 0.5);
        assert_eq!(cfg.filter.min_delta, 2.0);
        assert_eq!(cfg.tasks.len(), 9);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "sead = 5\n").unwrap();
        assert!(matches!(RunConfig::load(&p), Err(Error::Config(_))));
    }

    #[test]
    fn parse_errors_exit_2() {
        assert_eq!(run_from_args(["degradekit", "synth", "--tasks", "sparkle", "--input", "x"]), 2);
        assert_eq!(run_from_args(["degradekit", "nope"]), 2);
    }

    #[test]
    fn zero_workers_is_usage() {
        let cli = Cli::try_parse_from(["degradekit", "--workers", "0", "stats", "m"]).unwrap();
        assert!(matches!(RunConfig::resolve(&cli), Err(Error::Usage(_))));
    }
}
