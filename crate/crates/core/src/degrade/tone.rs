use rand_distr::{Distribution, StandardNormal};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::seed::SeedTree;

/// `out = clamp(s·img^γ + N(0, σ_r))` on color channels; alpha is untouched.
/// With `linear` the curve is applied to linear-light values and the result
/// is re-encoded to sRGB.
pub fn apply_lowlight(
    img: &ImageBuffer,
    scale: f64,
    gamma: f64,
    read_noise: f64,
    linear: bool,
    seed: &SeedTree,
) -> Result<ImageBuffer> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::Param(format!("low-light scale {scale} outside (0, 1]")));
    }
    if !(1.0..=4.0).contains(&gamma) {
        return Err(Error::Param(format!("low-light gamma {gamma} outside [1, 4]")));
    }
    if !(0.0..=0.05).contains(&read_noise) {
        return Err(Error::Param(format!("read noise {read_noise} outside [0, 0.05]")));
    }
    let src = if linear { img.to_linear() } else { img.clone() };
    let (s, g) = (scale as f32, gamma as f32);
    let cc = src.color_channels();
    let ch = src.channels();
    let mut out = src.clone();
    let mut rng = seed.rng();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        if i % ch >= cc {
            continue;
        }
        let curved = if gamma == 1.0 { *v } else { v.powf(g) };
        let mut r = if scale == 1.0 { curved } else { s * curved };
        if read_noise > 0.0 {
            let n: f64 = StandardNormal.sample(&mut rng);
            r += (read_noise * n) as f32;
        }
        *v = r.clamp(0.0, 1.0);
    }
    Ok(if linear { out.to_srgb() } else { out })
}
