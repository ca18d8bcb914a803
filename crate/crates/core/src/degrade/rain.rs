use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::patterns::rain::{layer_from_alpha, stamp_segment};
use crate::patterns::{RainLayer, RainStreakParams, Streak};
use crate::seed::SeedTree;

use super::composite::overlay_channel;
use super::filters::{resize, Interp};

/// Near-field streaks relative to far-field ones.
pub const NEAR_DENSITY_FRACTION: f64 = 0.2;
pub const NEAR_OPACITY_BOOST: f64 = 1.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RainParams {
    pub streaks: RainStreakParams,
    pub splash_prob: f64,
    pub perspective_gain: f64,
}

impl RainParams {
    pub fn validate(&self) -> Result<()> {
        self.streaks.validate()?;
        if !(0.0..=1.0).contains(&self.splash_prob) {
            return Err(Error::Param(format!("splash_prob {} outside [0, 1]", self.splash_prob)));
        }
        if !(0.0..=4.0).contains(&self.perspective_gain) {
            return Err(Error::Param(format!("perspective_gain {} outside [0, 4]", self.perspective_gain)));
        }
        Ok(())
    }

    pub fn near_field(&self) -> RainStreakParams {
        let g = 1.0 + self.perspective_gain;
        RainStreakParams {
            density: self.streaks.density * NEAR_DENSITY_FRACTION,
            length: self.streaks.length * g,
            width: self.streaks.width * g,
            ..self.streaks.clone()
        }
    }
}

pub struct RainLayers {
    pub far: RainLayer,
    pub near: RainLayer,
    /// Alpha of the sputter droplets, kept apart from the near streaks.
    pub splashes: ImageBuffer,
}

/// Renders the far and near streak layers plus splash droplets at the
/// lower end of near streaks.
pub fn render_rain_layers(params: &RainParams, width: usize, height: usize, seed: &SeedTree) -> Result<RainLayers> {
    params.validate()?;
    let far = params.streaks.sample_streaks(width, height, &seed.child(0))?;
    let mut near = params.near_field().sample_streaks(width, height, &seed.child(1))?;
    for s in &mut near {
        s.opacity = (s.opacity * NEAR_OPACITY_BOOST).min(1.0);
    }
    let mut splash = vec![0f32; width * height];
    if params.splash_prob > 0.0 {
        let mut rng = seed.child(2).rng();
        for s in &near {
            if rng.gen::<f64>() >= params.splash_prob {
                continue;
            }
            let (a, b) = s.endpoints();
            let bottom = if a.1 > b.1 { a } else { b };
            let radius = 2.0 + 2.0 * s.width;
            for _ in 0..rng.gen_range(3..=6) {
                let r = radius * rng.gen::<f64>().sqrt();
                let th = rng.gen::<f64>() * std::f64::consts::TAU;
                let p = (bottom.0 + r * th.cos(), bottom.1 - (r * th.sin()).abs());
                let size = rng.gen_range(1.0..2.0);
                let opacity = rng.gen_range(0.5..0.9);
                stamp_segment(&mut splash, width, height, p, p, size, opacity);
            }
        }
    }
    let render = |streaks: &[Streak]| crate::patterns::rain::render_streaks(streaks, width, height);
    Ok(RainLayers {
        far: RainLayer {
            image: render(&far),
            streaks: far,
        },
        near: RainLayer {
            image: render(&near),
            streaks: near,
        },
        splashes: layer_from_alpha(&splash, width, height),
    })
}

fn screen(out: &mut ImageBuffer, layer: &ImageBuffer) {
    let cc = out.color_channels();
    for y in 0..out.height() {
        for x in 0..out.width() {
            let a = if layer.channels() == 4 { layer.get(x, y, 3) } else { 1.0 };
            if a == 0.0 {
                continue;
            }
            for c in 0..cc {
                let o = a * overlay_channel(layer, x, y, c, cc);
                let v = out.get(x, y, c);
                out.set(x, y, c, v + (1.0 - v) * o);
            }
        }
    }
}

/// Screen-blends far streaks, near streaks, splashes and an optional bank
/// pattern over `img`. Never darkens a pixel.
pub fn apply_rain(img: &ImageBuffer, params: &RainParams, bank_pattern: Option<&ImageBuffer>, seed: &SeedTree) -> Result<ImageBuffer> {
    let layers = render_rain_layers(params, img.width(), img.height(), seed)?;
    let mut out = img.clone();
    screen(&mut out, &layers.far.image);
    screen(&mut out, &layers.near.image);
    screen(&mut out, &layers.splashes);
    if let Some(p) = bank_pattern {
        let p = if p.same_size(img) {
            p.clone()
        } else {
            resize(p, img.width(), img.height(), Interp::Bilinear)
        };
        screen(&mut out, &p);
    }
    Ok(out)
}
