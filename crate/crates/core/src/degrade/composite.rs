//! Overlay compositing: moiré fusion, flare screen-blend, reflection layers.

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};

use super::blur::apply_gaussian_blur;
use super::filters::{resize, translate, Interp};

pub const MAX_MOIRE_PATTERNS: usize = 3;
pub const MAX_MOIRE_WEIGHT: f64 = 0.45;
/// Relative strength of the displaced second reflection.
pub const GHOST_WEIGHT: f32 = 0.4;

/// Overlay sample for image channel `c`: gray images read the overlay's luma.
#[inline]
pub(crate) fn overlay_channel(overlay: &ImageBuffer, x: usize, y: usize, c: usize, img_channels: usize) -> f32 {
    if img_channels == 1 && overlay.channels() >= 3 {
        0.2126 * overlay.get(x, y, 0) + 0.7152 * overlay.get(x, y, 1) + 0.0722 * overlay.get(x, y, 2)
    } else {
        overlay.get(x, y, c.min(overlay.color_channels() - 1))
    }
}

#[inline]
fn overlay_alpha(overlay: &ImageBuffer, x: usize, y: usize) -> f32 {
    if overlay.channels() == 4 {
        overlay.get(x, y, 3)
    } else {
        1.0
    }
}

fn fit(overlay: &ImageBuffer, img: &ImageBuffer) -> ImageBuffer {
    if overlay.same_size(img) {
        overlay.clone()
    } else {
        resize(overlay, img.width(), img.height(), Interp::Bilinear)
    }
}

/// `out = img·(1 − Σ wᵢαᵢ) + Σ wᵢαᵢ·patternᵢ`, clamped. Patterns are
/// resampled to the image size when needed.
pub fn apply_moire(img: &ImageBuffer, patterns: &[ImageBuffer], weights: &[f64]) -> Result<ImageBuffer> {
    if patterns.is_empty() || patterns.len() > MAX_MOIRE_PATTERNS {
        return Err(Error::Param(format!(
            "moiré fusion takes one to three patterns, got {}",
            patterns.len()
        )));
    }
    if weights.len() != patterns.len() {
        return Err(Error::Param(format!("{} weights for {} patterns", weights.len(), patterns.len())));
    }
    if let Some(w) = weights.iter().find(|w| !(0.0..=MAX_MOIRE_WEIGHT).contains(*w)) {
        return Err(Error::Param(format!("moiré weight {w} outside [0, {MAX_MOIRE_WEIGHT}]")));
    }
    let fitted: Vec<ImageBuffer> = patterns.iter().map(|p| fit(p, img)).collect();
    let cc = img.color_channels();
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let blend: Vec<f32> = fitted
                .iter()
                .zip(weights)
                .map(|(p, &w)| w as f32 * overlay_alpha(p, x, y))
                .collect();
            let keep = 1.0 - blend.iter().sum::<f32>();
            for c in 0..cc {
                let mut v = img.get(x, y, c) * keep;
                for (p, b) in fitted.iter().zip(&blend) {
                    v += b * overlay_channel(p, x, y, c, cc);
                }
                out.set(x, y, c, v);
            }
        }
    }
    Ok(out)
}

pub fn flip(img: &ImageBuffer, hflip: bool, vflip: bool) -> ImageBuffer {
    if !hflip && !vflip {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    ImageBuffer::from_fn(w, h, img.channels(), |x, y, c| {
        let sx = if hflip { w - 1 - x } else { x };
        let sy = if vflip { h - 1 - y } else { y };
        img.get(sx, sy, c)
    })
}

/// Screen blend of an RGBA sprite centered at `position` (normalized
/// coordinates): `out = 1 − (1 − img)·(1 − intensity·α·sprite)`.
pub fn apply_flare(
    img: &ImageBuffer,
    sprite: &ImageBuffer,
    position: (f64, f64),
    intensity: f64,
    hflip: bool,
    vflip: bool,
) -> Result<ImageBuffer> {
    let (px, py) = position;
    if !(0.0..=1.0).contains(&px) || !(0.0..=1.0).contains(&py) {
        return Err(Error::Param(format!("flare position ({px}, {py}) outside [0, 1]²")));
    }
    if !(0.0..=1.0).contains(&intensity) {
        return Err(Error::Param(format!("flare intensity {intensity} outside [0, 1]")));
    }
    let mut out = img.clone();
    if intensity == 0.0 {
        return Ok(out);
    }
    let sprite = flip(sprite, hflip, vflip);
    let cx = (px * (img.width() as f64 - 1.0)).round() as isize;
    let cy = (py * (img.height() as f64 - 1.0)).round() as isize;
    let ox = cx - (sprite.width() / 2) as isize;
    let oy = cy - (sprite.height() / 2) as isize;
    let cc = img.color_channels();
    for sy in 0..sprite.height() {
        let y = oy + sy as isize;
        if y < 0 || y >= img.height() as isize {
            continue;
        }
        for sx in 0..sprite.width() {
            let x = ox + sx as isize;
            if x < 0 || x >= img.width() as isize {
                continue;
            }
            let a = intensity as f32 * overlay_alpha(&sprite, sx, sy);
            if a == 0.0 {
                continue;
            }
            let (x, y) = (x as usize, y as usize);
            for c in 0..cc {
                let o = a * overlay_channel(&sprite, sx, sy, c, cc);
                let v = img.get(x, y, c);
                // Same as 1 − (1 − v)(1 − o), but exact when o = 0.
                out.set(x, y, c, v + (1.0 - v) * o);
            }
        }
    }
    Ok(out)
}

/// `out = α·T + β·(G(R) + 0.4·shift(G(R), offset)) / 1.4`, where `G` is a
/// Gaussian blur of width `blur_sigma`. A zero offset drops the ghost term
/// (and its normalization).
pub fn apply_reflection(
    transmission: &ImageBuffer,
    reflection: &ImageBuffer,
    alpha: f64,
    beta: f64,
    blur_sigma: f64,
    ghost_offset: (i32, i32),
) -> Result<ImageBuffer> {
    if !(0.5..=1.0).contains(&alpha) {
        return Err(Error::Param(format!("reflection alpha {alpha} outside [0.5, 1]")));
    }
    if !(0.0..=0.5).contains(&beta) {
        return Err(Error::Param(format!("reflection beta {beta} outside [0, 0.5]")));
    }
    let cc = transmission.color_channels();
    let r = fit(reflection, transmission);
    let r = if cc == 1 { r.luminance() } else { r.to_rgb() };
    let g = apply_gaussian_blur(&r, blur_sigma)?;
    let layer = if ghost_offset != (0, 0) {
        let ghost = translate(&g, ghost_offset.0 as isize, ghost_offset.1 as isize);
        let data = g
            .data()
            .iter()
            .zip(ghost.data())
            .map(|(a, b)| (a + GHOST_WEIGHT * b) / (1.0 + GHOST_WEIGHT))
            .collect();
        ImageBuffer::from_vec(g.width(), g.height(), g.channels(), data)?
    } else {
        g
    };
    let (a, b) = (alpha as f32, beta as f32);
    let mut out = transmission.clone();
    for y in 0..out.height() {
        for x in 0..out.width() {
            for c in 0..cc {
                out.set(x, y, c, a * transmission.get(x, y, c) + b * layer.get(x, y, c));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> ImageBuffer {
        ImageBuffer::from_fn(24, 20, 3, |x, y, c| ((x * 3 + y * 5 + c * 7) % 17) as f32 / 16.0)
    }

    #[test]
    fn zero_weight_moire_is_identity() {
        let img = chart();
        let pat = ImageBuffer::filled(24, 20, 4, 0.9);
        assert_eq!(apply_moire(&img, &[pat.clone(), pat], &[0.0, 0.0]).unwrap(), img);
    }

    #[test]
    fn moire_pattern_count_checked() {
        let img = chart();
        let p = ImageBuffer::filled(24, 20, 4, 0.9);
        let four = vec![p.clone(), p.clone(), p.clone(), p];
        assert!(apply_moire(&img, &four, &[0.1; 4]).is_err());
        assert!(apply_moire(&img, &[], &[]).is_err());
        assert!(apply_moire(&img, &four[..1], &[0.5]).is_err());
    }

    #[test]
    fn moire_scalar_blend() {
        let img = ImageBuffer::filled(4, 4, 3, 0.5);
        let p = ImageBuffer::from_fn(4, 4, 4, |_, _, c| if c == 3 { 1.0 } else { 0.9 });
        let out = apply_moire(&img, &[p], &[0.3]).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.62).abs() < 1e-6));
    }

    #[test]
    fn flare_zero_intensity_and_brightening() {
        let img = chart();
        let sprite = crate::patterns::gen_flare_sprite(crate::patterns::FlareKind::Ring, 1.0, 0.4, 3, 15);
        assert_eq!(apply_flare(&img, &sprite, (0.3, 0.6), 0.0, false, false).unwrap(), img);
        let out = apply_flare(&img, &sprite, (0.3, 0.6), 0.9, true, true).unwrap();
        assert!(out.data().iter().zip(img.data()).all(|(o, i)| o >= i));
        assert!(out != img);
        assert!(apply_flare(&img, &sprite, (1.2, 0.5), 0.5, false, false).is_err());
    }

    #[test]
    fn flare_scalar_screen_blend() {
        let img = ImageBuffer::filled(5, 5, 3, 0.4);
        let sprite = ImageBuffer::filled(1, 1, 4, 1.0);
        let out = apply_flare(&img, &sprite, (0.5, 0.5), 0.5, false, false).unwrap();
        assert!((out.get(2, 2, 0) - 0.7).abs() < 1e-6);
        assert_eq!(out.get(0, 0, 0), 0.4);
    }

    #[test]
    fn reflection_without_beta_scales_transmission() {
        let t = chart();
        let r = ImageBuffer::filled(12, 10, 3, 0.8);
        let out = apply_reflection(&t, &r, 0.8, 0.0, 2.0, (3, 1)).unwrap();
        for (o, i) in out.data().iter().zip(t.data()) {
            assert_eq!(*o, 0.8f32 * i);
        }
        assert_eq!(apply_reflection(&t, &r, 1.0, 0.0, 2.0, (0, 0)).unwrap(), t);
    }

    #[test]
    fn reflection_scalar_sum() {
        let t = ImageBuffer::filled(16, 16, 3, 0.5);
        let r = ImageBuffer::filled(16, 16, 3, 1.0);
        let out = apply_reflection(&t, &r, 1.0, 0.3, 2.0, (0, 0)).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.8).abs() < 1e-6));
        let ghosted = apply_reflection(&t, &r, 1.0, 0.3, 2.0, (4, -2)).unwrap();
        assert!(ghosted.data().iter().all(|&v| (v - 0.8).abs() < 1e-6));
    }

    #[test]
    fn reflection_ranges_checked() {
        let t = chart();
        assert!(apply_reflection(&t, &t, 0.4, 0.1, 1.0, (0, 0)).is_err());
        assert!(apply_reflection(&t, &t, 0.9, 0.6, 1.0, (0, 0)).is_err());
    }
}
