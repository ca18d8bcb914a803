use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};

use super::filters::{convolve_separable, convolve_sparse, gaussian_kernel, SparseKernel};

/// Separable Gaussian blur, kernel truncated at 3σ, reflect padding.
/// `sigma == 0` returns the input unchanged.
pub fn apply_gaussian_blur(img: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Param(format!("gaussian sigma {sigma} must be finite and >= 0")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let k = gaussian_kernel(sigma);
    Ok(convolve_separable(img, &k, &k))
}

/// Anti-aliased line kernel: every pixel center within one pixel of the
/// segment gets weight `1 - distance`. The segment spans `length - 1` pixels
/// centered on the origin, so length 1 is the identity tap.
pub fn motion_kernel(length: f64, angle: f64) -> SparseKernel {
    let half = (length - 1.0).max(0.0) / 2.0;
    let (dx, dy) = (angle.cos(), angle.sin());
    let reach = half.ceil() as isize + 1;
    let mut taps = Vec::new();
    for y in -reach..=reach {
        for x in -reach..=reach {
            let (px, py) = (x as f64, y as f64);
            let t = (px * dx + py * dy).clamp(-half, half);
            let dist = ((px - t * dx).powi(2) + (py - t * dy).powi(2)).sqrt();
            let w = 1.0 - dist;
            if w > 1e-9 {
                taps.push((x, y, w));
            }
        }
    }
    let sum: f64 = taps.iter().map(|t| t.2).sum();
    SparseKernel {
        taps: taps.into_iter().map(|(x, y, w)| (x, y, (w / sum) as f32)).collect(),
    }
}

pub fn apply_motion_blur(img: &ImageBuffer, length: f64, angle: f64) -> Result<ImageBuffer> {
    if !(length >= 1.0) || !length.is_finite() {
        return Err(Error::Param(format!("motion length {length} must be >= 1")));
    }
    if length == 1.0 {
        return Ok(img.clone());
    }
    Ok(convolve_sparse(img, &motion_kernel(length, angle)))
}

/// Averages a burst of frames. Returns `(sharp, blurred)` where `sharp` is the
/// middle frame and `blurred` the per-pixel mean.
pub fn apply_temporal_average(frames: &[ImageBuffer]) -> Result<(ImageBuffer, ImageBuffer)> {
    if frames.len() < 2 {
        return Err(Error::Param("temporal averaging needs at least two frames".into()));
    }
    let first = &frames[0];
    if let Some(bad) = frames.iter().position(|f| !f.same_shape(first)) {
        return Err(Error::Shape(format!(
            "frame {bad} is {}x{}x{}, expected {}x{}x{}",
            frames[bad].width(),
            frames[bad].height(),
            frames[bad].channels(),
            first.width(),
            first.height(),
            first.channels()
        )));
    }
    let n = frames.len() as f64;
    let mut acc = vec![0f64; first.data().len()];
    for f in frames {
        acc.iter_mut().zip(f.data()).for_each(|(a, &v)| *a += v as f64);
    }
    let data = acc.into_iter().map(|v| (v / n) as f32).collect();
    let blurred = ImageBuffer::from_vec(first.width(), first.height(), first.channels(), data)?;
    Ok((frames[frames.len() / 2].clone(), blurred))
}
