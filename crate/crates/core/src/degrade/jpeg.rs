//! Baseline JPEG round trip.
//!
//! Standard Annex K quantization tables scaled by quality (IJG convention).
//! Chroma is subsampled 4:2:0 below quality 90 and kept 4:4:4 at or above it.


use jpeg_encoder::{ColorType, Encoder, SamplingFactor};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};

pub const SUBSAMPLING_THRESHOLD: u8 = 90;

fn check_quality(quality: u8) -> Result<()> {
    if (1..=100).contains(&quality) {
        Ok(())
    } else {
        Err(Error::Param(format!("jpeg quality {quality} outside 1..=100")))
    }
}

/// Encodes to baseline JPEG bytes. Alpha, if present, is dropped.
pub fn encode_jpeg(img: &ImageBuffer, quality: u8) -> Result<Vec<u8>> {
    check_quality(quality)?;
    let img = img.to_srgb();
    let (w, h) = (img.width(), img.height());
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::Param(format!("{w}x{h} exceeds the JPEG size limit")));
    }
    let q8 = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let (raw, color): (Vec<u8>, ColorType) = match img.channels() {
        1 => (img.data().iter().map(|&v| q8(v)).collect(), ColorType::Luma),
        _ => (
            img.data()
                .chunks_exact(img.channels())
                .flat_map(|p| [q8(p[0]), q8(p[1]), q8(p[2])])
                .collect(),
            ColorType::Rgb,
        ),
    };
    let mut out = Vec::new();
    let mut enc = Encoder::new(&mut out, quality);
    enc.set_sampling_factor(if quality < SUBSAMPLING_THRESHOLD {
        SamplingFactor::R_4_2_0
    } else {
        SamplingFactor::R_4_4_4
    });
    enc.encode(&raw, w as u16, h as u16, color)
        .map_err(|e| Error::Format(format!("jpeg encode: {e}")))?;
    Ok(out)
}

/// Encode/decode round trip at `quality`. Channel layout is preserved; an
/// alpha plane passes through untouched.
pub fn apply_jpeg(img: &ImageBuffer, quality: u8) -> Result<ImageBuffer> {
    let bytes = encode_jpeg(img, quality)?;
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Jpeg)
        .map_err(|e| Error::Format(format!("jpeg decode: {e}")))?;
    let (w, h) = (img.width(), img.height());
    let ch = img.channels();
    let mut out = img.to_srgb();
    if ch == 1 {
        let luma = decoded.to_luma8();
        for (d, &s) in out.data_mut().iter_mut().zip(luma.as_raw()) {
            *d = s as f32 / 255.0;
        }
    } else {
        let rgb = decoded.to_rgb8();
        let raw = rgb.as_raw();
        for i in 0..w * h {
            for c in 0..3 {
                out.data_mut()[i * ch + c] = raw[i * 3 + c] as f32 / 255.0;
            }
        }
    }
    if img.linear {
        out = out.to_linear();
    }
    Ok(out)
}

/// Mean absolute neighbor difference along each 8×8 block boundary line,
/// divided by the mean over the interior lines of the blocks on both sides,
/// then the median over all boundary lines in both directions. Roughly 1
/// for natural images, large for blocky ones. The median keeps a single
/// strong edge that happens to sit on the grid from dominating.
pub fn blockiness(img: &ImageBuffer) -> f64 {
    let lum = img.luminance();
    let (w, h) = (lum.width(), lum.height());
    let col = |x: usize| (0..h).map(|y| (lum.get(x, y, 0) - lum.get(x - 1, y, 0)).abs() as f64).sum::<f64>() / h as f64;
    let row = |y: usize| (0..w).map(|x| (lum.get(x, y, 0) - lum.get(x, y - 1, 0)).abs() as f64).sum::<f64>() / w as f64;
    let mut ratios = Vec::new();
    for (len, line) in [(w, &col as &dyn Fn(usize) -> f64), (h, &row)] {
        let mut b = 8;
        while b + 1 < len {
            let interior: Vec<f64> = (b - 7..b).chain(b + 1..(b + 8).min(len)).map(line).collect();
            let intra = interior.iter().sum::<f64>() / interior.len() as f64;
            ratios.push((line(b) + BLOCKINESS_FLOOR) / (intra + BLOCKINESS_FLOOR));
            b += 8;
        }
    }
    if ratios.is_empty() {
        return 1.0;
    }
    ratios.sort_by(f64::total_cmp);
    let m = ratios.len();
    if m % 2 == 1 {
        ratios[m / 2]
    } else {
        0.5 * (ratios[m / 2 - 1] + ratios[m / 2])
    }
}

/// Added to both sides of each line ratio so flat regions read as 1.
const BLOCKINESS_FLOOR: f64 = 0.01;
