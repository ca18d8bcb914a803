use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::seed::SeedTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlareKind {
    RadialGlow,
    Streak,
    Ring,
}

impl FlareKind {
    pub const ALL: [FlareKind; 3] = [FlareKind::RadialGlow, FlareKind::Streak, FlareKind::Ring];
}

impl std::str::FromStr for FlareKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "radial_glow" | "glow" => Ok(FlareKind::RadialGlow),
            "streak" => Ok(FlareKind::Streak),
            "ring" => Ok(FlareKind::Ring),
            _ => Err(crate::error::Error::Param(format!("unknown flare kind {s:?}"))),
        }
    }
}

/// Number of ids in the procedural flare bank.
pub const FLARE_BANK_SIZE: u32 = 3000;
const FLARE_BANK_ROOT: u64 = 0xF1A2E;

/// Sprite recipe drawn from the procedural bank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlareRecipe {
    pub kind: FlareKind,
    pub color_temp: f64,
    pub seed: u64,
}

impl FlareRecipe {
    pub fn from_bank_id(id: u32) -> Self {
        let mut rng = SeedTree::new(FLARE_BANK_ROOT).child(id as u64).rng();
        FlareRecipe {
            kind: FlareKind::ALL[(id % 3) as usize],
            color_temp: rng.gen_range(-1.0..1.0),
            seed: rng.gen(),
        }
    }
}

/// Warm (`+1`) to cool (`-1`) tint, max component 1.
fn tint(color_temp: f64) -> [f64; 3] {
    let t = color_temp.clamp(-1.0, 1.0);
    let rgb = [1.0 + 0.35 * t.max(0.0), 1.0 - 0.1 * t.abs(), 1.0 + 0.35 * (-t).max(0.0) - 0.25 * t.max(0.0)];
    let m = rgb.iter().cloned().fold(0.0, f64::max);
    rgb.map(|v| v / m)
}

/// Square RGBA sprite of side `size`. Luminance falls off from the center;
/// alpha is proportional to luminance with maximum `intensity`.
pub fn gen_flare_sprite(kind: FlareKind, intensity: f64, color_temp: f64, seed: u64, size: usize) -> ImageBuffer {
    let intensity = intensity.clamp(0.0, 1.0);
    let mut rng = SeedTree::new(seed).rng();
    let half = size as f64 / 2.0;
    let c = (size as f64 - 1.0) / 2.0;
    let core = rng.gen_range(0.08..0.16) * half;
    let halo = rng.gen_range(0.3..0.5) * half;
    let streak_angle = rng.gen_range(0.0..PI);
    let streak_width = rng.gen_range(0.015..0.04) * half;
    let ring_radius = rng.gen_range(0.45..0.75) * half;
    let ring_width = rng.gen_range(0.03..0.08) * half;
    let (sa, ca) = streak_angle.sin_cos();

    let profile = |x: f64, y: f64| -> f64 {
        let (dx, dy) = (x - c, y - c);
        let r = (dx * dx + dy * dy).sqrt();
        let glow = (-(r / core).powi(2)).exp() + 0.35 * (-r / halo).exp();
        let edge = (1.0 - r / half).clamp(0.0, 1.0);
        let v = match kind {
            FlareKind::RadialGlow => glow,
            FlareKind::Streak => {
                let along = dx * ca + dy * sa;
                let across = -dx * sa + dy * ca;
                0.6 * glow + (-(across / streak_width).abs()).exp() * (-(along / half).powi(2) * 3.0).exp()
            }
            FlareKind::Ring => {
                0.5 * glow + 0.7 * (-((r - ring_radius) / ring_width).powi(2)).exp()
            }
        };
        v * edge
    };

    let lum: Vec<f64> = (0..size * size).map(|i| profile((i % size) as f64, (i / size) as f64)).collect();
    let peak = lum.iter().cloned().fold(0.0, f64::max).max(1e-12);
    let tint = tint(color_temp);
    let mut img = ImageBuffer::new(size, size, 4);
    for (i, &l) in lum.iter().enumerate() {
        let (x, y) = (i % size, i / size);
        let n = l / peak;
        for (ch, t) in tint.iter().enumerate() {
            img.set(x, y, ch, (t * (0.6 + 0.4 * n)) as f32);
        }
        img.set(x, y, 3, (intensity * n) as f32);
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_transparent() {
        for k in FlareKind::ALL {
            let s = gen_flare_sprite(k, 0.0, 0.3, 5, 33);
            assert!(s.channel(3).data().iter().all(|&a| a == 0.0));
        }
    }

    #[test]
    fn glow_center_dominates_border() {
        let n = 41;
        let s = gen_flare_sprite(FlareKind::RadialGlow, 0.8, -0.5, 9, n);
        let center = s.get(n / 2, n / 2, 3);
        for i in 0..n {
            for (x, y) in [(i, 0), (i, n - 1), (0, i), (n - 1, i)] {
                assert!(center >= s.get(x, y, 3));
            }
        }
        let peak = s.channel(3).data().iter().cloned().fold(0.0, f32::max);
        assert!((peak - 0.8).abs() < 1e-6);
    }

    #[test]
    fn sprites_are_deterministic() {
        for k in FlareKind::ALL {
            assert_eq!(gen_flare_sprite(k, 1.0, 0.2, 77, 24), gen_flare_sprite(k, 1.0, 0.2, 77, 24));
        }
        assert_eq!(FlareRecipe::from_bank_id(12), FlareRecipe::from_bank_id(12));
    }

    #[test]
    fn color_temp_tints() {
        let warm = gen_flare_sprite(FlareKind::RadialGlow, 1.0, 1.0, 1, 9);
        let cool = gen_flare_sprite(FlareKind::RadialGlow, 1.0, -1.0, 1, 9);
        assert!(warm.get(4, 4, 0) > warm.get(4, 4, 2));
        assert!(cool.get(4, 4, 2) > cool.get(4, 4, 0));
    }
}
