use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::patterns::SegMask;
use crate::seed::SeedTree;

use super::filters::{convolve_raw, gaussian_kernel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseSpec {
    Gaussian { sigma: f64 },
    /// White noise low-passed to `size` pixels, renormalized to `sigma`.
    Grain { sigma: f64, size: f64 },
    /// Region `k` of the mask gets `sigmas[k % sigmas.len()]`.
    Segment { sigmas: Vec<f64> },
}

fn check_sigma(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Param(format!("noise sigma {s} must be finite and >= 0")));
    }
    Ok(())
}

fn normal(rng: &mut crate::seed::Rng) -> f32 {
    let n: f64 = StandardNormal.sample(rng);
    n as f32
}

/// Additive noise on color channels. `mask` is required by segment mode and
/// must match the image size.
pub fn apply_noise(img: &ImageBuffer, spec: &NoiseSpec, mask: Option<&SegMask>, seed: &SeedTree) -> Result<ImageBuffer> {
    let cc = img.color_channels();
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    let mut rng = seed.rng();
    match spec {
        NoiseSpec::Gaussian { sigma } => {
            check_sigma(*sigma)?;
            if *sigma == 0.0 {
                return Ok(out);
            }
            let s = *sigma as f32;
            for y in 0..h {
                for x in 0..w {
                    for c in 0..cc {
                        let v = img.get(x, y, c) + s * normal(&mut rng);
                        out.set(x, y, c, v);
                    }
                }
            }
        }
        NoiseSpec::Grain { sigma, size } => {
            check_sigma(*sigma)?;
            if !(*size > 0.0) {
                return Err(Error::Param(format!("grain size {size} must be > 0")));
            }
            if *sigma == 0.0 {
                return Ok(out);
            }
            let white: Vec<f32> = (0..w * h).map(|_| normal(&mut rng)).collect();
            let k = gaussian_kernel(size / 2.0);
            let grain = convolve_raw(&white, w, h, 1, &k, &k);
            let mean = grain.iter().map(|&v| v as f64).sum::<f64>() / grain.len() as f64;
            let var = grain.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / grain.len() as f64;
            let gain = if var > 0.0 { sigma / var.sqrt() } else { 0.0 };
            for y in 0..h {
                for x in 0..w {
                    let n = ((grain[y * w + x] as f64 - mean) * gain) as f32;
                    for c in 0..cc {
                        out.set(x, y, c, img.get(x, y, c) + n);
                    }
                }
            }
        }
        NoiseSpec::Segment { sigmas } => {
            let mask = mask.ok_or_else(|| Error::Param("segment noise needs a mask".into()))?;
            if mask.width != w || mask.height != h {
                return Err(Error::Shape(format!(
                    "mask is {}x{}, image is {w}x{h}",
                    mask.width, mask.height
                )));
            }
            if sigmas.is_empty() {
                return Err(Error::Param("segment noise needs at least one sigma".into()));
            }
            for s in sigmas {
                check_sigma(*s)?;
            }
            for y in 0..h {
                for x in 0..w {
                    let s = sigmas[mask.at(x, y) as usize % sigmas.len()] as f32;
                    if s == 0.0 {
                        continue;
                    }
                    for c in 0..cc {
                        out.set(x, y, c, img.get(x, y, c) + s * normal(&mut rng));
                    }
                }
            }
        }
    }
    Ok(out)
}
