use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::patterns::DepthMap;

use super::filters::{resize, Interp};

/// Atmospheric scattering: `t = exp(−β·d)`, `base = J·t + A·(1 − t)`, then
/// `out = (1 − w·τ)·base + w·τ·A` with τ the optional haze texture.
pub fn apply_haze(
    img: &ImageBuffer,
    depth: &DepthMap,
    beta: f64,
    airlight: f64,
    texture: Option<&ImageBuffer>,
    texture_weight: f64,
) -> Result<ImageBuffer> {
    if depth.width != img.width() || depth.height != img.height() {
        return Err(Error::Shape(format!(
            "depth is {}x{}, image is {}x{}",
            depth.width,
            depth.height,
            img.width(),
            img.height()
        )));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Param(format!("haze beta {beta} must be finite and >= 0")));
    }
    if !(0.0..=1.0).contains(&airlight) {
        return Err(Error::Param(format!("airlight {airlight} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&texture_weight) {
        return Err(Error::Param(format!("texture weight {texture_weight} outside [0, 1]")));
    }
    let tex = match texture {
        Some(t) if texture_weight > 0.0 => {
            let t = if t.channels() == 1 { t.clone() } else { t.luminance() };
            Some(if t.same_size(img) {
                t
            } else {
                resize(&t, img.width(), img.height(), Interp::Bilinear)
            })
        }
        _ => None,
    };
    if beta == 0.0 && tex.is_none() {
        return Ok(img.clone());
    }
    let cc = img.color_channels();
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let t = (-beta * depth.at(x, y) as f64).exp();
            let mix = tex.as_ref().map_or(0.0, |tx| texture_weight * tx.get(x, y, 0) as f64);
            for c in 0..cc {
                let j = img.get(x, y, c) as f64;
                let base = j * t + airlight * (1.0 - t);
                out.set(x, y, c, ((1.0 - mix) * base + mix * airlight) as f32);
            }
        }
    }
    Ok(out)
}
