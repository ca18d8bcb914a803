//! Perceptual distance backends: a multi-scale structural dissimilarity and
//! ingestion of externally computed values.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::buffer::ImageBuffer;
use crate::degrade::filters::{convolve_raw, gaussian_window, resize, Interp};
use crate::error::{Error, Result};

pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

pub trait DistanceBackend: Sync {
    /// Distance in [0, 1] between `a` and `b`.
    fn dist(&self, id_a: &str, a: &ImageBuffer, id_b: &str, b: &ImageBuffer) -> Result<f64>;
}

/// `1 − MS-SSIM` over up to five dyadic scales.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReferenceDistance;

impl DistanceBackend for ReferenceDistance {
    fn dist(&self, _: &str, a: &ImageBuffer, _: &str, b: &ImageBuffer) -> Result<f64> {
        Ok(ms_ssim_distance(a, b))
    }
}

fn color_planes(img: &ImageBuffer, rgb: bool) -> ImageBuffer {
    if rgb {
        img.to_rgb()
    } else {
        img.channel(0)
    }
}

/// Mean SSIM over pixels and channels of two equally shaped buffers.
fn ssim_mean(a: &[f32], b: &[f32], w: usize, h: usize, ch: usize, win: &[f32]) -> f64 {
    let prod = |x: &[f32], y: &[f32]| -> Vec<f32> { x.iter().zip(y).map(|(p, q)| p * q).collect() };
    let mu_a = convolve_raw(a, w, h, ch, win, win);
    let mu_b = convolve_raw(b, w, h, ch, win, win);
    let aa = convolve_raw(&prod(a, a), w, h, ch, win, win);
    let bb = convolve_raw(&prod(b, b), w, h, ch, win, win);
    let ab = convolve_raw(&prod(a, b), w, h, ch, win, win);
    let mut total = 0.0;
    for i in 0..a.len() {
        let (ma, mb) = (mu_a[i] as f64, mu_b[i] as f64);
        let va = aa[i] as f64 - ma * ma;
        let vb = bb[i] as f64 - mb * mb;
        let cov = ab[i] as f64 - ma * mb;
        let l = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
        let cs = (2.0 * cov + C2) / (va + vb + C2);
        total += l * cs;
    }
    total / a.len() as f64
}

fn halve(img: &ImageBuffer) -> ImageBuffer {
    let (w, h) = (img.width() / 2, img.height() / 2);
    ImageBuffer::from_fn(w, h, img.channels(), |x, y, c| {
        (img.get(2 * x, 2 * y, c) + img.get(2 * x + 1, 2 * y, c) + img.get(2 * x, 2 * y + 1, c) + img.get(2 * x + 1, 2 * y + 1, c))
            / 4.0
    })
}

/// MS-SSIM dissimilarity with the full SSIM term at every scale. Scales stop
/// once the shorter side would drop below the window; the weights of the
/// scales used are renormalized. `b` is resampled to `a` when sizes differ.
pub fn ms_ssim_distance(a: &ImageBuffer, b: &ImageBuffer) -> f64 {
    let rgb = a.color_channels() > 1 || b.color_channels() > 1;
    let mut x = color_planes(a, rgb);
    let mut y = color_planes(b, rgb);
    if !x.same_size(&y) {
        log::warn!(
            "distance: resampling {}x{} to {}x{}",
            y.width(),
            y.height(),
            x.width(),
            x.height()
        );
        y = resize(&y, x.width(), x.height(), Interp::Bilinear);
    }
    let mut scales = 1;
    let mut side = x.width().min(x.height());
    while scales < MS_SSIM_WEIGHTS.len() && side / 2 >= SSIM_WINDOW {
        side /= 2;
        scales += 1;
    }
    let weights = &MS_SSIM_WEIGHTS[..scales];
    let wsum: f64 = weights.iter().sum();
    let win = gaussian_window(SSIM_WINDOW, SSIM_SIGMA);
    let mut log_sim = 0.0;
    for (i, wt) in weights.iter().enumerate() {
        if i > 0 {
            x = halve(&x);
            y = halve(&y);
        }
        let s = ssim_mean(x.data(), y.data(), x.width(), x.height(), x.channels(), &win).clamp(0.0, 1.0);
        if s == 0.0 {
            return 1.0;
        }
        log_sim += wt / wsum * s.ln();
    }
    (1.0 - log_sim.exp()).clamp(0.0, 1.0)
}

#[derive(Deserialize)]
struct DistLine {
    id_a: String,
    id_b: String,
    dist: f64,
}

/// Distances produced elsewhere, read from JSON Lines `{id_a, id_b, dist}`.
/// Lookups are symmetric in the id pair.
#[derive(Clone, Debug, Default)]
pub struct IngestedDistance {
    values: HashMap<(String, String), f64>,
}

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl IngestedDistance {
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let l: DistLine = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("distance line {}: {e}", n + 1)))?;
            if !(0.0..=1.0).contains(&l.dist) {
                return Err(Error::Format(format!("distance line {}: {} outside [0, 1]", n + 1, l.dist)));
            }
            values.insert(key(&l.id_a, &l.id_b), l.dist);
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_jsonl(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn insert(&mut self, a: &str, b: &str, dist: f64) {
        self.values.insert(key(a, b), dist);
    }
}

impl DistanceBackend for IngestedDistance {
    fn dist(&self, id_a: &str, _: &ImageBuffer, id_b: &str, _: &ImageBuffer) -> Result<f64> {
        if id_a == id_b {
            return Ok(0.0);
        }
        self.values
            .get(&key(id_a, id_b))
            .copied()
            .ok_or_else(|| Error::Lookup(format!("no distance for ({id_a}, {id_b})")))
    }
}

/// LPS between two images through `backend`.
pub fn perceptual_distance(
    a: (&str, &ImageBuffer),
    b: (&str, &ImageBuffer),
    backend: &dyn DistanceBackend,
) -> Result<f64> {
    backend.dist(a.0, a.1, b.0, b.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::gen_scene;

    #[test]
    fn identity_is_zero() {
        let s = gen_scene(1, 96, 80).image;
        assert_eq!(ms_ssim_distance(&s, &s), 0.0);
    }

    #[test]
    fn black_white_far_apart() {
        let a = ImageBuffer::filled(64, 64, 3, 0.0);
        let b = ImageBuffer::filled(64, 64, 3, 1.0);
        assert!(ms_ssim_distance(&a, &b) >= 0.9);
    }

    #[test]
    fn symmetric_and_bounded() {
        let a = gen_scene(2, 80, 72).image;
        let b = crate::degrade::apply_gaussian_blur(&a, 2.0).unwrap();
        let d1 = ms_ssim_distance(&a, &b);
        let d2 = ms_ssim_distance(&b, &a);
        assert!((d1 - d2).abs() < 1e-9);
        assert!(d1 > 0.0 && d1 < 1.0);
    }

    #[test]
    fn resamples_mismatched_sizes() {
        let a = ImageBuffer::filled(64, 64, 3, 0.4);
        let b = ImageBuffer::filled(32, 32, 3, 0.4);
        let d = ms_ssim_distance(&a, &b);
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn ingestion_pass_through() {
        let d = IngestedDistance::from_jsonl("{\"id_a\":\"x\",\"id_b\":\"y\",\"dist\":0.413}\n").unwrap();
        let img = ImageBuffer::new(1, 1, 1);
        assert_eq!(d.dist("x", &img, "y", &img).unwrap(), 0.413);
        assert_eq!(d.dist("y", &img, "x", &img).unwrap(), 0.413);
        assert!(matches!(d.dist("x", &img, "z", &img), Err(Error::Lookup(_))));
        assert!(IngestedDistance::from_jsonl("{\"id_a\":\"x\",\"id_b\":\"y\",\"dist\":1.5}").is_err());
    }
}
