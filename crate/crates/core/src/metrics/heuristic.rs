//! No-reference statistics for the five tasks that have one, mapped to the
//! 1–5 scale by fixed piecewise-linear calibrations.

use crate::buffer::ImageBuffer;
use crate::degrade::filters::reflect;
use crate::degrade::jpeg::blockiness;
use crate::error::{Error, Result};
use crate::task::TaskKind;

use super::score::DegradationScore;

/// Side of the dark-channel window.
pub const DARK_CHANNEL_WINDOW: usize = 15;

pub const HEURISTIC_TASKS: [TaskKind; 5] = [
    TaskKind::Blur,
    TaskKind::Noise,
    TaskKind::LowLight,
    TaskKind::Haze,
    TaskKind::Compression,
];

/// `ln` of the variance of the 4-neighbor Laplacian of luminance.
pub fn log_laplacian_variance(img: &ImageBuffer) -> f64 {
    let lum = img.luminance();
    let (w, h) = (lum.width(), lum.height());
    let at = |x: isize, y: isize| lum.get(reflect(x, w), reflect(y, h), 0) as f64;
    let mut vals = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            vals.push(at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y));
        }
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (var + 1e-8).ln()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Noise σ from the median absolute deviation of the response to the
/// `[1 −2 1]ᵀ[1 −2 1]` high-pass (L2 norm 6), scaled to a Gaussian σ.
pub fn noise_sigma_mad(img: &ImageBuffer) -> f64 {
    let lum = img.luminance();
    let (w, h) = (lum.width(), lum.height());
    if w < 3 || h < 3 {
        return 0.0;
    }
    const K: [[f64; 3]; 3] = [[1.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 1.0]];
    let mut r = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let mut acc = 0.0;
            for (j, row) in K.iter().enumerate() {
                for (i, k) in row.iter().enumerate() {
                    acc += k * lum.get(x + i - 1, y + j - 1, 0) as f64;
                }
            }
            r.push(acc);
        }
    }
    let med = median(&mut r.clone());
    let mut dev: Vec<f64> = r.iter().map(|v| (v - med).abs()).collect();
    1.4826 * median(&mut dev) / 6.0
}

pub fn mean_luminance(img: &ImageBuffer) -> f64 {
    img.luminance().mean()
}

/// Mean of the per-pixel channel minimum, min-filtered over a square window.
pub fn dark_channel_mean(img: &ImageBuffer, window: usize) -> f64 {
    let (w, h) = (img.width(), img.height());
    let cc = img.color_channels();
    let mins: Vec<f32> = (0..w * h)
        .map(|i| (0..cc).map(|c| img.get(i % w, i / w, c)).fold(1.0, f32::min))
        .collect();
    let r = (window / 2) as isize;
    let mut rows = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let lo = (x as isize - r).max(0) as usize;
            let hi = (x as isize + r).min(w as isize - 1) as usize;
            rows[y * w + x] = mins[y * w + lo..=y * w + hi].iter().cloned().fold(1.0, f32::min);
        }
    }
    let mut total = 0.0;
    for y in 0..h {
        let lo = (y as isize - r).max(0) as usize;
        let hi = (y as isize + r).min(h as isize - 1) as usize;
        for x in 0..w {
            total += (lo..=hi).map(|yy| rows[yy * w + x]).fold(1.0, f32::min) as f64;
        }
    }
    total / (w * h) as f64
}

/// Raw statistic for `task`.
pub fn raw_statistic(img: &ImageBuffer, task: TaskKind) -> Result<f64> {
    Ok(match task {
        TaskKind::Blur => log_laplacian_variance(img),
        TaskKind::Noise => noise_sigma_mad(img),
        TaskKind::LowLight => mean_luminance(img),
        TaskKind::Haze => dark_channel_mean(img, DARK_CHANNEL_WINDOW),
        TaskKind::Compression => blockiness(img),
        other => {
            return Err(Error::Unsupported(format!(
                "no heuristic scorer for {other}; use an ingestion backend"
            )))
        }
    })
}

/// Piecewise-linear `(statistic, score)` knots, statistic ascending.
/// Values outside the knot range take the end scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub knots: Vec<(f64, f64)>,
}

impl Calibration {
    pub fn map(&self, stat: f64) -> f64 {
        let k = &self.knots;
        if stat <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            if stat <= w[1].0 {
                let t = (stat - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + (w[1].1 - w[0].1) * t;
            }
        }
        k[k.len() - 1].1
    }
}

/// The shipped calibration for `task`, fitted on the procedural corpus.
pub fn calibration(task: TaskKind) -> Result<Calibration> {
    let knots = match task {
        TaskKind::Blur => vec![(-11.0, 1.0), (-10.0, 1.5), (-4.5, 4.5), (-4.0, 5.0)],
        TaskKind::Noise => vec![(0.002, 5.0), (0.004, 4.5), (0.05, 1.5), (0.07, 1.0)],
        TaskKind::LowLight => vec![(0.03, 1.0), (0.08, 1.5), (0.3, 4.5), (0.4, 5.0)],
        TaskKind::Haze => vec![(0.1, 5.0), (0.15, 4.5), (0.5, 1.5), (0.65, 1.0)],
        TaskKind::Compression => vec![(0.9, 5.0), (1.0, 4.5), (1.25, 3.0), (1.8, 1.5), (2.2, 1.0)],
        other => return Err(Error::Unsupported(format!("no heuristic scorer for {other}"))),
    };
    Ok(Calibration { knots })
}

pub fn heuristic_degradation_score(img: &ImageBuffer, task: TaskKind) -> Result<DegradationScore> {
    let stat = raw_statistic(img, task)?;
    Ok(DegradationScore::new(calibration(task)?.map(stat)))
}
