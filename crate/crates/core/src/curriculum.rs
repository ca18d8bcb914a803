//! Two-stage training schedule math: task sampling, synthetic/real mixing
//! and learning-rate curves.

use std::f64::consts::PI;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SeedTree;
use crate::task::{Origin, TaskKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageName {
    Transfer,
    Sft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrMode {
    Constant,
    CosineToZero,
}

/// Optimizer settings, carried for reporting only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerMeta {
    pub name: String,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub grad_clip: f64,
}

impl OptimizerMeta {
    fn adamw(weight_decay: f64) -> Self {
        Self {
            name: "adamw".into(),
            beta1: 0.9,
            beta2: 0.95,
            eps: 1e-8,
            weight_decay,
            grad_clip: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub name: StageName,
    pub steps: u64,
    pub warmup_steps: u64,
    pub base_lr: f64,
    pub lr_mode: LrMode,
    pub batch: u32,
    pub mix_synth: f64,
    pub mix_real: f64,
    /// Fraction of leading transformer blocks held frozen. Reported only.
    pub frozen_fraction: f64,
    pub optimizer: OptimizerMeta,
}

impl StageConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mix_synth >= 0.0 && self.mix_real >= 0.0) || self.mix_synth + self.mix_real <= 0.0 {
            return Err(Error::Config(format!(
                "mix weights {}:{} must be non-negative and not both zero",
                self.mix_synth, self.mix_real
            )));
        }
        if self.warmup_steps > self.steps {
            return Err(Error::Config(format!("warmup {} exceeds {} steps", self.warmup_steps, self.steps)));
        }
        if self.steps == 0 || !(self.base_lr >= 0.0) {
            return Err(Error::Config("stage needs steps > 0 and base_lr >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.frozen_fraction) {
            return Err(Error::Config(format!("frozen fraction {} outside [0, 1]", self.frozen_fraction)));
        }
        Ok(())
    }

    pub fn synthetic_share(&self) -> f64 {
        self.mix_synth / (self.mix_synth + self.mix_real)
    }
}

pub fn default_stages() -> (StageConfig, StageConfig) {
    let transfer = StageConfig {
        name: StageName::Transfer,
        steps: 500,
        warmup_steps: 100,
        base_lr: 1e-5,
        lr_mode: LrMode::Constant,
        batch: 16,
        mix_synth: 1.0,
        mix_real: 0.0,
        frozen_fraction: 0.0,
        optimizer: OptimizerMeta::adamw(0.0),
    };
    let sft = StageConfig {
        name: StageName::Sft,
        steps: 1500,
        warmup_steps: 100,
        base_lr: 1e-5,
        lr_mode: LrMode::CosineToZero,
        batch: 32,
        mix_synth: 2.0,
        mix_real: 8.0,
        frozen_fraction: 0.25,
        optimizer: OptimizerMeta::adamw(0.01),
    };
    (transfer, sft)
}

/// Stage 1 or 2 of the defaults.
pub fn default_stage(index: u8) -> Result<StageConfig> {
    let (a, b) = default_stages();
    match index {
        1 => Ok(a),
        2 => Ok(b),
        _ => Err(Error::Usage(format!("stage must be 1 or 2, got {index}"))),
    }
}

/// Learning rate at `step` in `0..=steps`: linear warmup from 0, then
/// constant or cosine decay reaching 0 at `steps`.
pub fn lr_at(stage: &StageConfig, step: u64) -> Result<f64> {
    if step > stage.steps {
        return Err(Error::Param(format!("step {step} outside 0..={}", stage.steps)));
    }
    let (w, n) = (stage.warmup_steps, stage.steps);
    if step < w {
        return Ok(stage.base_lr * step as f64 / w as f64);
    }
    Ok(match stage.lr_mode {
        LrMode::Constant => stage.base_lr,
        LrMode::CosineToZero if n == w => 0.0,
        LrMode::CosineToZero if step == n => 0.0,
        LrMode::CosineToZero => {
            let t = (step - w) as f64 / (n - w) as f64;
            stage.base_lr * 0.5 * (1.0 + (PI * t).cos())
        }
    })
}

/// One sampled training draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draw {
    pub index: u64,
    pub task: TaskKind,
    pub origin: Origin,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawLog {
    pub draws: Vec<Draw>,
}

impl DrawLog {
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for d in &self.draws {
            out.push_str(&serde_json::to_string(d)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let draws = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::Format(format!("draw log: {e}"))))
            .collect::<Result<Vec<Draw>>>()?;
        Ok(Self { draws })
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Param("need at least one draw".into()));
    }
    Ok(())
}

/// Uniform i.i.d. tasks. Draw `i` uses seed child `i`, so the result does not
/// depend on the worker count.
pub fn task_sample(seed: &SeedTree, n: u64) -> Result<Vec<TaskKind>> {
    check_n(n)?;
    Ok((0..n)
        .into_par_iter()
        .map(|i| TaskKind::ALL[seed.child(i).rng().gen_range(0..TaskKind::ALL.len())])
        .collect())
}

/// Bernoulli synthetic/real origins at the stage's ratio. With `ramp`, the
/// synthetic share moves linearly from 1 at the first draw to the stage
/// ratio at the last.
pub fn mix_sample(stage: &StageConfig, seed: &SeedTree, n: u64, ramp: bool) -> Result<Vec<Origin>> {
    check_n(n)?;
    stage.validate()?;
    let p_end = stage.synthetic_share();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let p = if ramp && n > 1 {
                1.0 + (p_end - 1.0) * i as f64 / (n - 1) as f64
            } else {
                p_end
            };
            let u: f64 = seed.child(i).rng().gen();
            if u < p {
                Origin::Synthetic
            } else {
                Origin::Real
            }
        })
        .collect())
}

/// Tasks from `seed.child(0)` and origins from `seed.child(1)`.
pub fn sample_draws(stage: &StageConfig, seed: &SeedTree, n: u64, ramp: bool) -> Result<DrawLog> {
    let tasks = task_sample(&seed.child(0), n)?;
    let origins = mix_sample(stage, &seed.child(1), n, ramp)?;
    Ok(DrawLog {
        draws: tasks
            .into_iter()
            .zip(origins)
            .enumerate()
            .map(|(i, (task, origin))| Draw {
                index: i as u64,
                task,
                origin,
            })
            .collect(),
    })
}

/// `step,lr` rows for every step of the stage.
pub fn lr_csv(stage: &StageConfig) -> Result<String> {
    let mut out = String::from("step,lr\n");
    for s in 0..=stage.steps {
        out.push_str(&format!("{s},{:e}\n", lr_at(stage, s)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let (a, b) = default_stages();
        assert_eq!((a.mix_synth, a.mix_real), (1.0, 0.0));
        assert_eq!((b.mix_synth, b.mix_real), (2.0, 8.0));
        assert_eq!(b.frozen_fraction, 0.25);
        assert_eq!((a.steps, b.steps, a.batch, b.batch), (500, 1500, 16, 32));
        a.validate().unwrap();
        b.validate().unwrap();
    }

    #[test]
    fn lr_points() {
        let (a, b) = default_stages();
        assert_eq!(lr_at(&a, 100).unwrap(), 1e-5);
        assert_eq!(lr_at(&a, 500).unwrap(), 1e-5);
        assert!((lr_at(&a, 50).unwrap() - 5e-6).abs() < 1e-18);
        assert_eq!(lr_at(&b, 1500).unwrap(), 0.0);
        assert!((lr_at(&b, 800).unwrap() - 5e-6).abs() < 1e-12);
        assert!(matches!(lr_at(&b, 1501), Err(Error::Param(_))));
        // continuous at the warmup boundary
        assert!((lr_at(&b, 99).unwrap() - 0.99e-5).abs() < 1e-15);
        assert_eq!(lr_at(&b, 100).unwrap(), 1e-5);
    }

    #[test]
    fn cosine_non_increasing() {
        let (_, b) = default_stages();
        let v: Vec<f64> = (100..=1500).map(|s| lr_at(&b, s).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn task_frequencies() {
        let t = task_sample(&SeedTree::new(11), 9000).unwrap();
        for k in TaskKind::ALL {
            let f = t.iter().filter(|x| **x == k).count() as f64 / 9000.0;
            assert!((f - 1.0 / 9.0).abs() <= 0.015, "{k}: {f}");
        }
        assert_eq!(t, task_sample(&SeedTree::new(11), 9000).unwrap());
        assert_eq!(task_sample(&SeedTree::new(1), 1).unwrap().len(), 1);
        assert!(task_sample(&SeedTree::new(1), 0).is_err());
    }

    #[test]
    fn mixing_ratios() {
        let (a, b) = default_stages();
        let s = SeedTree::new(4);
        assert!(mix_sample(&a, &s, 500, false).unwrap().iter().all(|o| *o == Origin::Synthetic));
        let o = mix_sample(&b, &s, 10_000, false).unwrap();
        let real = o.iter().filter(|x| **x == Origin::Real).count() as f64 / 10_000.0;
        assert!((real - 0.8).abs() <= 0.015, "{real}");
        assert_eq!(o, mix_sample(&b, &s, 10_000, false).unwrap());
    }

    #[test]
    fn ramp_starts_synthetic() {
        let (_, b) = default_stages();
        let o = mix_sample(&b, &SeedTree::new(2), 10_000, true).unwrap();
        let head = o[..1000].iter().filter(|x| **x == Origin::Synthetic).count();
        let tail = o[9000..].iter().filter(|x| **x == Origin::Synthetic).count();
        assert!(head > 800 && tail < 400, "{head} {tail}");
        assert_eq!(o[0], Origin::Synthetic);
    }

    #[test]
    fn invalid_stage() {
        let (mut a, _) = default_stages();
        a.mix_synth = 0.0;
        assert!(a.validate().is_err());
        let (mut a, _) = default_stages();
        a.warmup_steps = 600;
        assert!(a.validate().is_err());
    }

    #[test]
    fn draw_log_round_trip() {
        let (_, b) = default_stages();
        let log = sample_draws(&b, &SeedTree::new(9), 50, false).unwrap();
        assert_eq!(log.draws.len(), 50);
        assert_eq!(DrawLog::from_jsonl(&log.to_jsonl().unwrap()).unwrap(), log);
    }
}
