//! Randomized web-history chains: downscale, noise, re-encode, upscale.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::error::Result;
use crate::seed::SeedTree;

use super::compression::MIN_CHAIN_SIDE;
use super::filters::{resize, Interp};
use super::jpeg::apply_jpeg;
use super::noise::{apply_noise, NoiseSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderPolicy {
    #[default]
    Fixed,
    Shuffled,
}

/// Stage probabilities and parameter ranges. Second-order passes use the
/// milder half of each range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WebChainConfig {
    pub resize_prob: f64,
    pub scale_range: (f64, f64),
    pub noise_prob: f64,
    /// Share of noise stages that use grain instead of Gaussian noise.
    pub grain_share: f64,
    pub gaussian_sigma_range: (f64, f64),
    pub grain_sigma_range: (f64, f64),
    pub grain_size_range: (f64, f64),
    pub jpeg_prob: f64,
    pub quality_range: (u8, u8),
    pub second_order_prob: f64,
}

impl Default for WebChainConfig {
    fn default() -> Self {
        WebChainConfig {
            resize_prob: 0.8,
            scale_range: (0.3, 0.9),
            noise_prob: 0.6,
            grain_share: 0.4,
            gaussian_sigma_range: (0.005, 0.04),
            grain_sigma_range: (0.01, 0.05),
            grain_size_range: (1.0, 3.0),
            jpeg_prob: 0.9,
            quality_range: (30, 95),
            second_order_prob: 0.5,
        }
    }
}

impl WebChainConfig {
    /// Every stage disabled.
    pub fn disabled() -> Self {
        WebChainConfig {
            resize_prob: 0.0,
            noise_prob: 0.0,
            jpeg_prob: 0.0,
            second_order_prob: 0.0,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "stage")]
pub enum WebStage {
    Resize { width: usize, height: usize, interp: Interp },
    Noise { spec: NoiseSpec },
    Jpeg { quality: u8 },
}

#[derive(Clone, Copy)]
enum Kind {
    Down,
    Noise,
    Jpeg,
}

const INTERPS: [Interp; 3] = [Interp::Nearest, Interp::Bilinear, Interp::Bicubic];

fn draw(rng: &mut crate::seed::Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Samples the stage list for a `width`×`height` input.
pub fn sample_web_chain(width: usize, height: usize, seed: &SeedTree, policy: OrderPolicy, cfg: &WebChainConfig) -> Vec<WebStage> {
    let mut rng = seed.child(0).rng();
    let mut stages = Vec::new();
    let passes = if rng.gen::<f64>() < cfg.second_order_prob { 2 } else { 1 };
    for pass in 0..passes {
        let mild = pass == 1;
        let mut kinds = [Kind::Down, Kind::Noise, Kind::Jpeg];
        if policy == OrderPolicy::Shuffled {
            kinds.shuffle(&mut rng);
        }
        let (mut w, mut h) = (width, height);
        for kind in kinds {
            match kind {
                Kind::Down => {
                    if rng.gen::<f64>() >= cfg.resize_prob {
                        continue;
                    }
                    let (lo, hi) = cfg.scale_range;
                    let range = if mild { (1.0 - (1.0 - lo) / 2.0, 1.0 - (1.0 - hi) / 2.0) } else { (lo, hi) };
                    let s = draw(&mut rng, range);
                    let interp = *INTERPS.choose(&mut rng).expect("non-empty");
                    let (nw, nh) = (((w as f64 * s).round() as usize), ((h as f64 * s).round() as usize));
                    if nw < MIN_CHAIN_SIDE || nh < MIN_CHAIN_SIDE || (nw, nh) == (w, h) {
                        continue;
                    }
                    (w, h) = (nw, nh);
                    stages.push(WebStage::Resize { width: w, height: h, interp });
                }
                Kind::Noise => {
                    if rng.gen::<f64>() >= cfg.noise_prob {
                        continue;
                    }
                    let damp = if mild { 0.5 } else { 1.0 };
                    let spec = if rng.gen::<f64>() < cfg.grain_share {
                        NoiseSpec::Grain {
                            sigma: damp * draw(&mut rng, cfg.grain_sigma_range),
                            size: draw(&mut rng, cfg.grain_size_range),
                        }
                    } else {
                        NoiseSpec::Gaussian {
                            sigma: damp * draw(&mut rng, cfg.gaussian_sigma_range),
                        }
                    };
                    stages.push(WebStage::Noise { spec });
                }
                Kind::Jpeg => {
                    if rng.gen::<f64>() >= cfg.jpeg_prob {
                        continue;
                    }
                    let (lo, hi) = cfg.quality_range;
                    let lo = if mild { ((lo as u16 + hi as u16) / 2) as u8 } else { lo };
                    let quality = rng.gen_range(lo.max(1)..=hi.max(lo.max(1)).min(100));
                    stages.push(WebStage::Jpeg { quality });
                }
            }
        }
        if (w, h) != (width, height) {
            let interp = *INTERPS[1..].choose(&mut rng).expect("non-empty");
            stages.push(WebStage::Resize { width, height, interp });
        }
    }
    stages
}

/// Replays a stage list. Noise stage `i` draws from child `1 + i`.
pub fn apply_web_stages(img: &ImageBuffer, stages: &[WebStage], seed: &SeedTree) -> Result<ImageBuffer> {
    let mut cur = img.clone();
    for (i, stage) in stages.iter().enumerate() {
        cur = match stage {
            WebStage::Resize { width, height, interp } => resize(&cur, *width, *height, *interp),
            WebStage::Noise { spec } => apply_noise(&cur, spec, None, &seed.child(1 + i as u64))?,
            WebStage::Jpeg { quality } => apply_jpeg(&cur, *quality)?,
        };
    }
    Ok(cur)
}

pub fn apply_web_chain(
    img: &ImageBuffer,
    seed: &SeedTree,
    policy: OrderPolicy,
    cfg: &WebChainConfig,
) -> Result<(ImageBuffer, Vec<WebStage>)> {
    let stages = sample_web_chain(img.width(), img.height(), seed, policy, cfg);
    let out = apply_web_stages(img, &stages, seed)?;
    Ok((out, stages))
}
