use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::seed::SeedTree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RainStreakParams {
    /// Expected streaks per 1000 pixels.
    pub density: f64,
    pub length: f64,
    pub angle: f64,
    pub width: f64,
    pub wind_jitter: f64,
}

/// One rendered segment, centered at `(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Streak {
    pub x: f64,
    pub y: f64,
    pub length: f64,
    pub width: f64,
    pub angle: f64,
    pub opacity: f64,
}

impl Streak {
    pub fn endpoints(&self) -> ((f64, f64), (f64, f64)) {
        let half = (self.length - 1.0).max(0.0) / 2.0;
        let (s, c) = self.angle.sin_cos();
        ((self.x - half * c, self.y - half * s), (self.x + half * c, self.y + half * s))
    }
}

pub struct RainLayer {
    pub image: ImageBuffer,
    pub streaks: Vec<Streak>,
}

/// Maximum angular deviation (radians) at `wind_jitter = 1`.
const MAX_JITTER: f64 = 0.35;

impl RainStreakParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.density >= 0.0) || !(self.length >= 1.0) || !(self.width > 0.0) {
            return Err(Error::Param(format!(
                "rain streaks need density >= 0, length >= 1, width > 0 (got {}, {}, {})",
                self.density, self.length, self.width
            )));
        }
        if !(0.0..=1.0).contains(&self.wind_jitter) {
            return Err(Error::Param(format!("wind_jitter {} outside [0, 1]", self.wind_jitter)));
        }
        Ok(())
    }

    /// Draws the streak geometry. Centers sit on pixel centers; the count is
    /// Poisson with mean `density · area / 1000`.
    pub fn sample_streaks(&self, width: usize, height: usize, seed: &SeedTree) -> Result<Vec<Streak>> {
        self.validate()?;
        let mut rng = seed.rng();
        let lambda = self.density * (width * height) as f64 / 1000.0;
        let count = if lambda > 0.0 {
            Poisson::new(lambda).map_err(|e| Error::Param(e.to_string()))?.sample(&mut rng) as usize
        } else {
            0
        };
        Ok((0..count)
            .map(|_| {
                let x = rng.gen_range(0..width) as f64;
                let y = rng.gen_range(0..height) as f64;
                let jitter = if self.wind_jitter > 0.0 {
                    rng.gen_range(-1.0..1.0) * self.wind_jitter * MAX_JITTER
                } else {
                    0.0
                };
                let length = 1.0 + (self.length - 1.0) * rng.gen_range(0.85..1.15);
                Streak {
                    x,
                    y,
                    length,
                    width: self.width,
                    angle: self.angle + jitter,
                    opacity: rng.gen_range(0.35..0.9),
                }
            })
            .collect())
    }
}

fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        (((px - a.0) * vx + (py - a.1) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * vx, a.1 + t * vy);
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}

/// Screen-accumulates an anti-aliased capsule into `alpha`.
pub(crate) fn stamp_segment(alpha: &mut [f32], w: usize, h: usize, a: (f64, f64), b: (f64, f64), width: f64, opacity: f64) {
    let reach = width / 2.0 + 1.0;
    let x0 = (a.0.min(b.0) - reach).floor().max(0.0) as usize;
    let x1 = (a.0.max(b.0) + reach).ceil().min(w as f64 - 1.0);
    let y0 = (a.1.min(b.1) - reach).floor().max(0.0) as usize;
    let y1 = (a.1.max(b.1) + reach).ceil().min(h as f64 - 1.0);
    if x1 < 0.0 || y1 < 0.0 {
        return;
    }
    for y in y0..=y1 as usize {
        for x in x0..=x1 as usize {
            let d = segment_distance(x as f64, y as f64, a, b);
            let cover = (width / 2.0 + 0.5 - d).clamp(0.0, 1.0);
            if cover > 0.0 {
                let v = &mut alpha[y * w + x];
                *v = 1.0 - (1.0 - *v) * (1.0 - (cover * opacity) as f32);
            }
        }
    }
}

/// Renders streaks into a white RGBA layer whose alpha carries coverage.
pub fn render_streaks(streaks: &[Streak], width: usize, height: usize) -> ImageBuffer {
    let mut alpha = vec![0f32; width * height];
    for s in streaks {
        let (a, b) = s.endpoints();
        stamp_segment(&mut alpha, width, height, a, b, s.width, s.opacity);
    }
    layer_from_alpha(&alpha, width, height)
}

pub(crate) fn layer_from_alpha(alpha: &[f32], width: usize, height: usize) -> ImageBuffer {
    let mut img = ImageBuffer::new(width, height, 4);
    for (i, &a) in alpha.iter().enumerate() {
        let (x, y) = (i % width, i / width);
        for c in 0..3 {
            img.set(x, y, c, 0.92);
        }
        img.set(x, y, 3, a);
    }
    img
}

pub fn gen_rain_streaks(params: &RainStreakParams, width: usize, height: usize, seed: &SeedTree) -> Result<RainLayer> {
    let streaks = params.sample_streaks(width, height, seed)?;
    Ok(RainLayer {
        image: render_streaks(&streaks, width, height),
        streaks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(density: f64, length: f64, angle: f64, width: f64) -> RainStreakParams {
        RainStreakParams {
            density,
            length,
            angle,
            width,
            wind_jitter: 0.0,
        }
    }

    #[test]
    fn unit_streaks_are_isolated_pixels() {
        let layer = gen_rain_streaks(&params(2.0, 1.0, 1.2, 1.0), 96, 96, &SeedTree::new(3)).unwrap();
        let a = layer.image.channel(3);
        for y in 0..96 {
            for x in 0..96 {
                if a.get(x, y, 0) > 0.0 {
                    // every lit pixel sits exactly on some streak center
                    assert!(layer.streaks.iter().any(|s| s.x as usize == x && s.y as usize == y));
                }
            }
        }
    }

    #[test]
    fn streak_count_is_poisson() {
        let (w, h, d) = (256, 256, 1.0);
        let lambda = d * (w * h) as f64 / 1000.0;
        for seed in 0..5 {
            let layer = gen_rain_streaks(&params(d, 1.0, 0.0, 1.0), w, h, &SeedTree::new(seed)).unwrap();
            // Counting oracle: lit pixels in the rendered layer.
            let lit = layer.image.channel(3).data().iter().filter(|&&a| a > 0.0).count() as f64;
            assert!((lit - lambda).abs() <= 3.0 * lambda.sqrt(), "seed {seed}: {lit} vs {lambda}");
        }
    }

    #[test]
    fn vertical_streaks_are_tall() {
        let layer = gen_rain_streaks(&params(0.3, 12.0, std::f64::consts::FRAC_PI_2, 1.0), 128, 128, &SeedTree::new(8)).unwrap();
        assert!(!layer.streaks.is_empty());
        for s in &layer.streaks {
            let ((x0, y0), (x1, y1)) = s.endpoints();
            assert!((y1 - y0).abs() > (x1 - x0).abs() + 1.0);
        }
    }

    #[test]
    fn zero_density_renders_nothing() {
        let layer = gen_rain_streaks(&params(0.0, 10.0, 1.0, 2.0), 32, 32, &SeedTree::new(1)).unwrap();
        assert!(layer.streaks.is_empty());
        assert!(layer.image.channel(3).data().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(gen_rain_streaks(&params(1.0, 0.5, 0.0, 1.0), 8, 8, &SeedTree::new(1)).is_err());
        assert!(gen_rain_streaks(&params(-1.0, 2.0, 0.0, 1.0), 8, 8, &SeedTree::new(1)).is_err());
    }
}
