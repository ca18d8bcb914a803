use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::patterns::flare::FlareRecipe;
use crate::patterns::haze::haze_texture_from_bank;
use crate::patterns::{gen_flare_sprite, gen_moire_pattern, DepthMap, MoireParams, PatternBank, RainStreakParams, SegMask};
use crate::seed::SeedTree;
use crate::task::TaskKind;

use super::blur::{apply_gaussian_blur, apply_motion_blur, apply_temporal_average};
use super::chain::{apply_web_stages, WebStage};
use super::composite::{apply_flare, apply_moire, apply_reflection, flip};
use super::compression::{apply_compression, ResizeStep};
use super::filters::{resize, translate, Interp};
use super::haze::apply_haze;
use super::noise::{apply_noise, NoiseSpec};
use super::rain::{apply_rain, RainParams};
use super::tone::apply_lowlight;

/// Motion and temporal modes apply the Gaussian defocus `sigma` first,
/// then the motion path of `length` at `angle`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlurMode {
    Gaussian,
    Motion,
    /// Mean of integer-shifted copies along the motion path.
    Temporal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReflectionSource {
    /// The clean image mirrored left-right.
    Mirror,
    /// Another image, supplied through the context.
    File { path: String },
}

/// Operator parameters, tagged by `op`. Together with the clean image, the
/// seed and the context assets they fully determine the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum DegradeParams {
    Blur {
        mode: BlurMode,
        sigma: f64,
        length: f64,
        angle: f64,
    },
    Compression {
        quality: Option<u8>,
        resize_chain: Vec<ResizeStep>,
    },
    Moire {
        pattern_ids: Vec<u32>,
        weights: Vec<f64>,
    },
    LowLight {
        scale: f64,
        gamma: f64,
        read_noise: f64,
        linear: bool,
    },
    Noise {
        gaussian_sigma: f64,
        grain_sigma: f64,
        grain_size: f64,
        region_sigmas: Vec<f64>,
    },
    Flare {
        sprite_id: u32,
        position: (f64, f64),
        intensity: f64,
        hflip: bool,
        vflip: bool,
        /// Sprite side as a fraction of the shorter image side.
        sprite_scale: f64,
    },
    Reflection {
        alpha: f64,
        beta: f64,
        blur_sigma: f64,
        ghost_offset: (i32, i32),
        source: ReflectionSource,
    },
    Haze {
        beta: f64,
        airlight: f64,
        texture_id: Option<u32>,
        texture_weight: f64,
    },
    Rain {
        streaks: RainStreakParams,
        splash_prob: f64,
        perspective_gain: f64,
        bank_pattern: Option<u32>,
    },
    WebChain {
        stages: Vec<WebStage>,
    },
}

fn in_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo..=hi).contains(&v) {
        return Err(Error::Param(format!("{name} = {v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

impl DegradeParams {
    pub fn task(&self) -> TaskKind {
        match self {
            DegradeParams::Blur { .. } => TaskKind::Blur,
            DegradeParams::Compression { .. } | DegradeParams::WebChain { .. } => TaskKind::Compression,
            DegradeParams::Moire { .. } => TaskKind::Moire,
            DegradeParams::LowLight { .. } => TaskKind::LowLight,
            DegradeParams::Noise { .. } => TaskKind::Noise,
            DegradeParams::Flare { .. } => TaskKind::Flare,
            DegradeParams::Reflection { .. } => TaskKind::Reflection,
            DegradeParams::Haze { .. } => TaskKind::Haze,
            DegradeParams::Rain { .. } => TaskKind::Rain,
        }
    }

    /// Range checks on the declared parameter domains.
    pub fn validate(&self) -> Result<()> {
        match self {
            DegradeParams::Blur { sigma, length, .. } => {
                in_range("blur sigma", *sigma, 0.0, 64.0)?;
                in_range("blur length", *length, 1.0, 256.0)
            }
            DegradeParams::Compression { quality, resize_chain } => {
                if let Some(q) = quality {
                    in_range("quality", *q as f64, 1.0, 100.0)?;
                }
                resize_chain.iter().try_for_each(|s| in_range("resize scale", s.scale, 1e-3, 16.0))
            }
            DegradeParams::Moire { pattern_ids, weights } => {
                if pattern_ids.is_empty() || pattern_ids.len() > 3 {
                    return Err(Error::Param(format!("moiré takes one to three patterns, got {}", pattern_ids.len())));
                }
                if weights.len() != pattern_ids.len() {
                    return Err(Error::Param("moiré weights and ids differ in length".into()));
                }
                weights.iter().try_for_each(|w| in_range("moiré weight", *w, 0.0, 1.0))
            }
            DegradeParams::LowLight { scale, gamma, read_noise, .. } => {
                if !(*scale > 0.0 && *scale <= 1.0) {
                    return Err(Error::Param(format!("low-light scale {scale} outside (0, 1]")));
                }
                in_range("gamma", *gamma, 1.0, 4.0)?;
                in_range("read noise", *read_noise, 0.0, 0.05)
            }
            DegradeParams::Noise {
                gaussian_sigma,
                grain_sigma,
                grain_size,
                region_sigmas,
            } => {
                in_range("gaussian sigma", *gaussian_sigma, 0.0, 1.0)?;
                in_range("grain sigma", *grain_sigma, 0.0, 1.0)?;
                in_range("grain size", *grain_size, 1e-3, 64.0)?;
                region_sigmas.iter().try_for_each(|s| in_range("region sigma", *s, 0.0, 1.0))
            }
            DegradeParams::Flare {
                position,
                intensity,
                sprite_scale,
                ..
            } => {
                in_range("flare x", position.0, 0.0, 1.0)?;
                in_range("flare y", position.1, 0.0, 1.0)?;
                in_range("flare intensity", *intensity, 0.0, 1.0)?;
                in_range("sprite scale", *sprite_scale, 0.01, 4.0)
            }
            DegradeParams::Reflection { alpha, beta, blur_sigma, .. } => {
                in_range("reflection alpha", *alpha, 0.5, 1.0)?;
                in_range("reflection beta", *beta, 0.0, 0.5)?;
                in_range("reflection blur", *blur_sigma, 0.0, 64.0)
            }
            DegradeParams::Haze {
                beta,
                airlight,
                texture_weight,
                ..
            } => {
                in_range("haze beta", *beta, 0.0, 4.0)?;
                in_range("airlight", *airlight, 0.6, 1.0)?;
                in_range("texture weight", *texture_weight, 0.0, 0.6)
            }
            DegradeParams::Rain {
                streaks,
                splash_prob,
                perspective_gain,
                ..
            } => RainParams {
                streaks: streaks.clone(),
                splash_prob: *splash_prob,
                perspective_gain: *perspective_gain,
            }
            .validate(),
            DegradeParams::WebChain { .. } => Ok(()),
        }
    }

    /// True when the parameters cannot change any pixel.
    pub fn is_identity(&self) -> bool {
        match self {
            DegradeParams::Blur { mode, sigma, length, .. } => match mode {
                BlurMode::Gaussian => *sigma == 0.0,
                BlurMode::Motion | BlurMode::Temporal => *sigma == 0.0 && *length <= 1.0,
            },
            DegradeParams::Compression { quality, resize_chain } => quality.is_none() && resize_chain.is_empty(),
            DegradeParams::Moire { weights, .. } => weights.iter().all(|w| *w == 0.0),
            DegradeParams::LowLight {
                scale, gamma, read_noise, ..
            } => *scale == 1.0 && *gamma == 1.0 && *read_noise == 0.0,
            DegradeParams::Noise {
                gaussian_sigma,
                grain_sigma,
                region_sigmas,
                ..
            } => *gaussian_sigma == 0.0 && *grain_sigma == 0.0 && region_sigmas.iter().all(|s| *s == 0.0),
            DegradeParams::Flare { intensity, .. } => *intensity == 0.0,
            DegradeParams::Reflection { alpha, beta, .. } => *alpha == 1.0 && *beta == 0.0,
            DegradeParams::Haze { beta, texture_weight, .. } => *beta == 0.0 && *texture_weight == 0.0,
            DegradeParams::Rain {
                streaks,
                splash_prob,
                bank_pattern,
                ..
            } => streaks.density == 0.0 && *splash_prob == 0.0 && bank_pattern.is_none(),
            DegradeParams::WebChain { stages } => stages.is_empty(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("params serialize")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(v.clone())?)
    }
}

/// Collected overlay banks. Empty slots fall back to the procedural banks.
#[derive(Clone, Debug, Default)]
pub struct Assets {
    pub moire: Option<PatternBank>,
    pub flare: Option<PatternBank>,
    pub rain: Option<PatternBank>,
    pub haze: Option<PatternBank>,
}

/// Per-image inputs besides the clean image itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct DegradeContext<'a> {
    pub assets: Option<&'a Assets>,
    pub depth: Option<&'a DepthMap>,
    pub mask: Option<&'a SegMask>,
    pub reflection: Option<&'a ImageBuffer>,
}

impl<'a> DegradeContext<'a> {
    fn bank(&self, pick: impl Fn(&'a Assets) -> &'a Option<PatternBank>) -> Option<&'a PatternBank> {
        self.assets.and_then(|a| pick(a).as_ref())
    }
}

fn temporal_blur(img: &ImageBuffer, length: f64, angle: f64) -> Result<ImageBuffer> {
    let half = ((length - 1.0) / 2.0).max(0.0);
    let n = half.ceil() as i64;
    if n == 0 {
        return Ok(img.clone());
    }
    let (c, s) = (angle.cos(), angle.sin());
    let frames: Vec<ImageBuffer> = (-n..=n)
        .map(|k| {
            let t = half * k as f64 / n as f64;
            translate(img, (t * c).round() as isize, (t * s).round() as isize)
        })
        .collect();
    Ok(apply_temporal_average(&frames)?.1)
}

fn defocus(img: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    if sigma > 0.0 {
        apply_gaussian_blur(img, sigma)
    } else {
        Ok(img.clone())
    }
}

/// Applies `params` to `img`.
pub fn degrade(img: &ImageBuffer, params: &DegradeParams, seed: &SeedTree, ctx: &DegradeContext) -> Result<ImageBuffer> {
    params.validate()?;
    if params.is_identity() {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    match params {
        DegradeParams::Blur { mode, sigma, length, angle } => match mode {
            BlurMode::Gaussian => apply_gaussian_blur(img, *sigma),
            BlurMode::Motion => apply_motion_blur(&defocus(img, *sigma)?, *length, *angle),
            BlurMode::Temporal => temporal_blur(&defocus(img, *sigma)?, *length, *angle),
        },
        DegradeParams::Compression { quality, resize_chain } => apply_compression(img, *quality, resize_chain),
        DegradeParams::Moire { pattern_ids, weights } => {
            let patterns = pattern_ids
                .iter()
                .map(|&id| match ctx.bank(|a| &a.moire) {
                    Some(b) => Ok(b.get(id).clone()),
                    None => gen_moire_pattern(&MoireParams::from_bank_id(id), w, h),
                })
                .collect::<Result<Vec<_>>>()?;
            let clipped: Vec<f64> = weights.iter().map(|w| w.min(super::composite::MAX_MOIRE_WEIGHT)).collect();
            apply_moire(img, &patterns, &clipped)
        }
        DegradeParams::LowLight {
            scale,
            gamma,
            read_noise,
            linear,
        } => apply_lowlight(img, *scale, *gamma, *read_noise, *linear, seed),
        DegradeParams::Noise {
            gaussian_sigma,
            grain_sigma,
            grain_size,
            region_sigmas,
        } => {
            let mut out = apply_noise(img, &NoiseSpec::Gaussian { sigma: *gaussian_sigma }, None, &seed.child(0))?;
            out = apply_noise(
                &out,
                &NoiseSpec::Grain {
                    sigma: *grain_sigma,
                    size: *grain_size,
                },
                None,
                &seed.child(1),
            )?;
            if let (Some(mask), false) = (ctx.mask, region_sigmas.iter().all(|s| *s == 0.0)) {
                let mask = mask.resized(w, h);
                let spec = NoiseSpec::Segment {
                    sigmas: region_sigmas.clone(),
                };
                out = apply_noise(&out, &spec, Some(&mask), &seed.child(2))?;
            }
            Ok(out)
        }
        DegradeParams::Flare {
            sprite_id,
            position,
            intensity,
            hflip,
            vflip,
            sprite_scale,
        } => {
            let side = ((sprite_scale * w.min(h) as f64).round() as usize).max(3);
            let sprite = match ctx.bank(|a| &a.flare) {
                Some(b) => {
                    let e = b.get(*sprite_id);
                    let k = side as f64 / e.width().max(e.height()) as f64;
                    let (sw, sh) = (((e.width() as f64 * k).round() as usize).max(1), ((e.height() as f64 * k).round() as usize).max(1));
                    resize(e, sw, sh, Interp::Bilinear)
                }
                None => {
                    let r = FlareRecipe::from_bank_id(*sprite_id);
                    gen_flare_sprite(r.kind, 1.0, r.color_temp, r.seed, side)
                }
            };
            apply_flare(img, &sprite, *position, *intensity, *hflip, *vflip)
        }
        DegradeParams::Reflection {
            alpha,
            beta,
            blur_sigma,
            ghost_offset,
            source,
        } => {
            let mirrored;
            let r = match source {
                ReflectionSource::Mirror => {
                    mirrored = flip(img, true, false);
                    &mirrored
                }
                ReflectionSource::File { path } => ctx
                    .reflection
                    .ok_or_else(|| Error::Lookup(format!("reflection layer {path} not supplied")))?,
            };
            apply_reflection(img, r, *alpha, *beta, *blur_sigma, *ghost_offset)
        }
        DegradeParams::Haze {
            beta,
            airlight,
            texture_id,
            texture_weight,
        } => {
            let depth = ctx.depth.ok_or_else(|| Error::Lookup("haze needs a depth map".into()))?;
            let depth = depth.resized(w, h);
            let texture = match texture_id {
                Some(id) => Some(match ctx.bank(|a| &a.haze) {
                    Some(b) => b.get(*id).luminance(),
                    None => haze_texture_from_bank(*id, w, h)?,
                }),
                None => None,
            };
            apply_haze(img, &depth, *beta, *airlight, texture.as_ref(), *texture_weight)
        }
        DegradeParams::Rain {
            streaks,
            splash_prob,
            perspective_gain,
            bank_pattern,
        } => {
            let rp = RainParams {
                streaks: streaks.clone(),
                splash_prob: *splash_prob,
                perspective_gain: *perspective_gain,
            };
            let pattern = match (bank_pattern, ctx.bank(|a| &a.rain)) {
                (Some(id), Some(b)) => Some(b.get(*id)),
                (Some(_), None) => return Err(Error::Bank("rain params name a bank pattern but no rain bank is loaded".into())),
                _ => None,
            };
            apply_rain(img, &rp, pattern, seed)
        }
        DegradeParams::WebChain { stages } => apply_web_stages(img, stages, seed),
    }
}
