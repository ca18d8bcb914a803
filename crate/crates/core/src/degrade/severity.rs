//! Severity → parameter ranges.
//!
//! Each task parameter has piecewise-linear knots `(severity, lo, hi)`.
//! Sampling at severity `s` interpolates `lo(s)` and `hi(s)` and draws
//! uniformly between them. Every knot at severity 0 sits on the identity
//! value of its parameter.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patterns::flare::FLARE_BANK_SIZE;
use crate::patterns::haze::HAZE_BANK_SIZE;
use crate::patterns::moire::MOIRE_BANK_SIZE;
use crate::patterns::RainStreakParams;
use crate::seed::{Rng, SeedTree};
use crate::task::{Severity, TaskKind};

use super::compression::ResizeStep;
use super::filters::Interp;
use super::params::{BlurMode, DegradeParams, ReflectionSource};

/// `(severity, lo, hi)`.
pub type Knot = (f64, f64, f64);

pub const SEVERITY_MAP_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeverityMap {
    pub version: u32,
    pub tasks: BTreeMap<TaskKind, BTreeMap<String, Vec<Knot>>>,
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

impl SeverityMap {
    /// The `[lo, hi]` range of `param` at severity `s`.
    pub fn range(&self, task: TaskKind, param: &str, s: f64) -> Result<(f64, f64)> {
        let knots = self
            .tasks
            .get(&task)
            .and_then(|m| m.get(param))
            .ok_or_else(|| Error::Config(format!("severity map has no {task}.{param}")))?;
        if knots.is_empty() {
            return Err(Error::Config(format!("severity map entry {task}.{param} is empty")));
        }
        let first = knots[0];
        if s <= first.0 {
            return Ok((first.1, first.2));
        }
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            if s == b.0 {
                return Ok((b.1, b.2));
            }
            if s < b.0 {
                let t = if b.0 > a.0 { (s - a.0) / (b.0 - a.0) } else { 1.0 };
                return Ok((lerp(a.1, b.1, t), lerp(a.2, b.2, t)));
            }
        }
        let last = knots[knots.len() - 1];
        Ok((last.1, last.2))
    }

    pub fn validate(&self) -> Result<()> {
        for (task, params) in &self.tasks {
            for (name, knots) in params {
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Config(format!("{task}.{name}: knots must have increasing severity")));
                }
                if knots.iter().any(|k| !(k.1 <= k.2) || !(0.0..=1.0).contains(&k.0)) {
                    return Err(Error::Config(format!("{task}.{name}: need lo <= hi and severity in [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

fn entry(pairs: &[(&str, &[Knot])]) -> BTreeMap<String, Vec<Knot>> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect()
}

impl Default for SeverityMap {
    /// The shipped default table.
    fn default() -> Self {
        use TaskKind::*;
        let mut tasks = BTreeMap::new();
        tasks.insert(
            Blur,
            entry(&[
                ("gaussian_sigma", &[(0.0, 0.0, 0.0), (1.0, 3.0, 4.0)]),
                ("motion_length", &[(0.0, 1.0, 1.0), (1.0, 16.0, 24.0)]),
            ]),
        );
        tasks.insert(
            Compression,
            entry(&[
                ("quality", &[(0.0, 100.0, 100.0), (0.25, 50.0, 60.0), (0.5, 25.0, 35.0), (0.75, 12.0, 18.0), (1.0, 5.0, 10.0)]),
                ("resize_scale", &[(0.0, 1.0, 1.0), (1.0, 0.4, 0.6)]),
            ]),
        );
        tasks.insert(Moire, entry(&[("weight", &[(0.0, 0.0, 0.0), (1.0, 0.35, 0.45)])]));
        tasks.insert(
            LowLight,
            entry(&[
                ("scale", &[(0.0, 1.0, 1.0), (1.0, 0.15, 0.25)]),
                ("gamma", &[(0.0, 1.0, 1.0), (1.0, 2.6, 3.0)]),
                ("read_noise", &[(0.0, 0.0, 0.0), (1.0, 0.005, 0.015)]),
            ]),
        );
        tasks.insert(
            Noise,
            entry(&[
                ("gaussian_sigma", &[(0.0, 0.0, 0.0), (1.0, 0.08, 0.1)]),
                ("grain_sigma", &[(0.0, 0.0, 0.0), (1.0, 0.02, 0.04)]),
                ("grain_size", &[(0.0, 1.5, 3.0), (1.0, 1.5, 3.0)]),
                ("region_sigma", &[(0.0, 0.0, 0.0), (1.0, 0.0, 0.04)]),
            ]),
        );
        tasks.insert(
            Flare,
            entry(&[
                ("intensity", &[(0.0, 0.0, 0.0), (1.0, 0.8, 1.0)]),
                ("sprite_scale", &[(0.0, 0.4, 0.8), (1.0, 0.4, 0.8)]),
            ]),
        );
        tasks.insert(
            Reflection,
            entry(&[
                ("alpha", &[(0.0, 1.0, 1.0), (1.0, 0.6, 0.75)]),
                ("beta", &[(0.0, 0.0, 0.0), (1.0, 0.35, 0.5)]),
                ("blur_sigma", &[(0.0, 1.0, 4.0), (1.0, 1.0, 4.0)]),
            ]),
        );
        tasks.insert(
            Haze,
            entry(&[
                ("beta", &[(0.0, 0.0, 0.0), (1.0, 2.5, 3.5)]),
                ("airlight", &[(0.0, 0.75, 1.0), (1.0, 0.75, 1.0)]),
                ("texture_weight", &[(0.0, 0.0, 0.0), (1.0, 0.2, 0.4)]),
            ]),
        );
        tasks.insert(
            Rain,
            entry(&[
                ("density", &[(0.0, 0.0, 0.0), (1.0, 2.0, 3.0)]),
                ("length", &[(0.0, 1.0, 1.0), (1.0, 18.0, 30.0)]),
                ("width", &[(0.0, 1.0, 1.0), (1.0, 1.0, 2.0)]),
                ("angle", &[(0.0, 1.27, 1.87), (1.0, 1.27, 1.87)]),
                ("wind_jitter", &[(0.0, 0.0, 0.5), (1.0, 0.0, 0.5)]),
                ("splash_prob", &[(0.0, 0.0, 0.0), (1.0, 0.2, 0.4)]),
                ("perspective_gain", &[(0.0, 0.5, 1.5), (1.0, 0.5, 1.5)]),
            ]),
        );
        SeverityMap {
            version: SEVERITY_MAP_VERSION,
            tasks,
        }
    }
}

struct Draw<'a> {
    map: &'a SeverityMap,
    task: TaskKind,
    s: f64,
    rng: Rng,
}

impl Draw<'_> {
    fn param(&mut self, name: &str) -> Result<f64> {
        let (lo, hi) = self.map.range(self.task, name, self.s)?;
        Ok(if hi > lo { self.rng.gen_range(lo..=hi) } else { lo })
    }
}

/// Draws operator parameters for `task` at `severity`. Severity 0 yields
/// identity-strength parameters.
pub fn severity_to_params(task: TaskKind, severity: Severity, map: &SeverityMap, seed: &SeedTree) -> Result<DegradeParams> {
    let s = severity.value();
    let zero = s == 0.0;
    let mut d = Draw {
        map,
        task,
        s,
        rng: seed.rng(),
    };
    Ok(match task {
        TaskKind::Blur => {
            let pick: f64 = d.rng.gen();
            let mode = if pick < 0.5 {
                BlurMode::Gaussian
            } else if pick < 0.85 {
                BlurMode::Motion
            } else {
                BlurMode::Temporal
            };
            let sigma = d.param("gaussian_sigma")?;
            let length = d.param("motion_length")?;
            let angle = d.rng.gen_range(0.0..PI);
            DegradeParams::Blur { mode, sigma, length, angle }
        }
        TaskKind::Compression => {
            let q = d.param("quality")?;
            let scale = d.param("resize_scale")?;
            let interp = *[Interp::Bilinear, Interp::Bicubic].choose(&mut d.rng).expect("non-empty");
            DegradeParams::Compression {
                quality: if zero { None } else { Some(q.round().clamp(1.0, 100.0) as u8) },
                resize_chain: if scale < 1.0 { vec![ResizeStep { scale, interp }] } else { Vec::new() },
            }
        }
        TaskKind::Moire => {
            let n = d.rng.gen_range(1..=3usize);
            let mut pattern_ids = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            for _ in 0..n {
                pattern_ids.push(d.rng.gen_range(0..MOIRE_BANK_SIZE));
                weights.push(d.param("weight")? / n as f64);
            }
            DegradeParams::Moire { pattern_ids, weights }
        }
        TaskKind::LowLight => DegradeParams::LowLight {
            scale: d.param("scale")?,
            gamma: d.param("gamma")?,
            read_noise: d.param("read_noise")?,
            linear: false,
        },
        TaskKind::Noise => {
            let gaussian_sigma = d.param("gaussian_sigma")?;
            let grain_sigma = d.param("grain_sigma")?;
            let grain_size = d.param("grain_size")?;
            let mut region_sigmas = Vec::with_capacity(4);
            for _ in 0..4 {
                region_sigmas.push(d.param("region_sigma")?);
            }
            DegradeParams::Noise {
                gaussian_sigma,
                grain_sigma,
                grain_size,
                region_sigmas,
            }
        }
        TaskKind::Flare => {
            let intensity = d.param("intensity")?;
            let sprite_scale = d.param("sprite_scale")?;
            DegradeParams::Flare {
                sprite_id: d.rng.gen_range(0..FLARE_BANK_SIZE),
                position: (d.rng.gen_range(0.1..0.9), d.rng.gen_range(0.1..0.9)),
                intensity,
                hflip: d.rng.gen(),
                vflip: d.rng.gen(),
                sprite_scale,
            }
        }
        TaskKind::Reflection => {
            let alpha = d.param("alpha")?;
            let beta = d.param("beta")?;
            let blur_sigma = d.param("blur_sigma")?;
            let ghost_offset = if d.rng.gen::<bool>() {
                let mut off = || d.rng.gen_range(2..=8) * if d.rng.gen::<bool>() { 1 } else { -1 };
                (off(), off())
            } else {
                (0, 0)
            };
            DegradeParams::Reflection {
                alpha,
                beta,
                blur_sigma,
                ghost_offset,
                source: ReflectionSource::Mirror,
            }
        }
        TaskKind::Haze => {
            let beta = d.param("beta")?;
            let airlight = d.param("airlight")?;
            let texture_weight = d.param("texture_weight")?;
            DegradeParams::Haze {
                beta,
                airlight,
                texture_id: Some(d.rng.gen_range(0..HAZE_BANK_SIZE)),
                texture_weight,
            }
        }
        TaskKind::Rain => {
            let streaks = RainStreakParams {
                density: d.param("density")?,
                length: d.param("length")?,
                angle: d.param("angle")?,
                width: d.param("width")?,
                wind_jitter: d.param("wind_jitter")?,
            };
            DegradeParams::Rain {
                streaks,
                splash_prob: d.param("splash_prob")?,
                perspective_gain: d.param("perspective_gain")?,
                bank_pattern: None,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_map_is_valid_and_versioned() {
        let m = SeverityMap::default();
        m.validate().unwrap();
        assert_eq!(m.version, SEVERITY_MAP_VERSION);
        assert_eq!(m.tasks.len(), 9);
    }

    #[test]
    fn lowlight_range_at_full_severity() {
        let m = SeverityMap::default();
        assert_eq!(m.range(TaskKind::LowLight, "scale", 1.0).unwrap(), (0.15, 0.25));
        assert_eq!(m.range(TaskKind::LowLight, "gamma", 1.0).unwrap(), (2.6, 3.0));
        for i in 0..50 {
            match severity_to_params(TaskKind::LowLight, Severity::MAX, &m, &SeedTree::new(i)).unwrap() {
                DegradeParams::LowLight { scale, gamma, .. } => {
                    assert!((0.15..=0.25).contains(&scale));
                    assert!((2.6..=3.0).contains(&gamma));
                }
                p => panic!("wrong variant {p:?}"),
            }
        }
    }

    #[test]
    fn interpolates_between_knots() {
        let m = SeverityMap::default();
        let (lo, hi) = m.range(TaskKind::Blur, "gaussian_sigma", 0.5).unwrap();
        assert!((lo - 1.5).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
        assert!(m.range(TaskKind::Blur, "nope", 0.5).is_err());
    }

    #[test]
    fn severity_zero_is_identity_strength() {
        let m = SeverityMap::default();
        for task in TaskKind::ALL {
            let p = severity_to_params(task, Severity::ZERO, &m, &SeedTree::new(3)).unwrap();
            assert!(p.is_identity(), "{task}: {p:?}");
        }
    }

    #[test]
    fn deterministic() {
        let m = SeverityMap::default();
        let sev = Severity::new(0.6).unwrap();
        for task in TaskKind::ALL {
            let a = severity_to_params(task, sev, &m, &SeedTree::new(9).child(2)).unwrap();
            let b = severity_to_params(task, sev, &m, &SeedTree::new(9).child(2)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn map_round_trips_through_toml_and_json() {
        let m = SeverityMap::default();
        let t = toml::to_string(&m).unwrap();
        assert_eq!(toml::from_str::<SeverityMap>(&t).unwrap(), m);
        let j = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<SeverityMap>(&j).unwrap(), m);
    }
}
