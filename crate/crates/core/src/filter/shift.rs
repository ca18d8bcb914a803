//! Alignment check by cross-correlating thinned edge maps.

use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::degrade::filters::reflect;
use crate::error::{Error, Result};

use super::verdict::{FilterVerdict, Reason};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShiftConfig {
    pub search_radius: usize,
    pub max_shift: usize,
    /// Gradient-magnitude quantile above which a pixel is an edge.
    pub edge_quantile: f64,
    /// Minimum fraction of skeleton pixels for a usable estimate.
    pub min_density: f64,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        Self {
            search_radius: 15,
            max_shift: 2,
            edge_quantile: 0.9,
            min_density: 0.001,
        }
    }
}

/// A binary map, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Skeleton {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn density(&self) -> f64 {
        self.count() as f64 / self.bits.len().max(1) as f64
    }

    fn at(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.bits[y as usize * self.width + x as usize]
    }
}

/// Sobel gradient magnitude of luminance.
pub fn sobel_magnitude(img: &ImageBuffer) -> Vec<f32> {
    let lum = img.luminance();
    let (w, h) = (lum.width(), lum.height());
    let at = |x: isize, y: isize| lum.get(reflect(x, w), reflect(y, h), 0);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1) - at(x - 1, y - 1) - 2.0 * at(x - 1, y) - at(x - 1, y + 1);
            let gy = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1) - at(x - 1, y - 1) - 2.0 * at(x, y - 1) - at(x + 1, y - 1);
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}

/// One Zhang–Suen thinning iteration (both sub-passes).
pub fn thin_once(sk: &mut Skeleton) {
    let (w, h) = (sk.width as isize, sk.height as isize);
    for pass in 0..2 {
        let mut clear = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if !sk.at(x, y) {
                    continue;
                }
                // P2..P9 clockwise from north
                let n = [
                    sk.at(x, y - 1),
                    sk.at(x + 1, y - 1),
                    sk.at(x + 1, y),
                    sk.at(x + 1, y + 1),
                    sk.at(x, y + 1),
                    sk.at(x - 1, y + 1),
                    sk.at(x - 1, y),
                    sk.at(x - 1, y - 1),
                ];
                let b = n.iter().filter(|v| **v).count();
                let a = (0..8).filter(|&i| !n[i] && n[(i + 1) % 8]).count();
                let (p2, p4, p6, p8) = (n[0], n[2], n[4], n[6]);
                let cond = if pass == 0 {
                    !(p2 && p4 && p6) && !(p4 && p6 && p8)
                } else {
                    !(p2 && p4 && p8) && !(p2 && p6 && p8)
                };
                if (2..=6).contains(&b) && a == 1 && cond {
                    clear.push((y * w + x) as usize);
                }
            }
        }
        for i in clear {
            sk.bits[i] = false;
        }
    }
}

/// Edge pixels above the `quantile` of gradient magnitude, thinned once.
pub fn edge_skeleton(img: &ImageBuffer, quantile: f64) -> Skeleton {
    let mag = sobel_magnitude(img);
    let mut sorted = mag.clone();
    sorted.sort_by(f32::total_cmp);
    let k = ((sorted.len() - 1) as f64 * quantile.clamp(0.0, 1.0)).floor() as usize;
    let thr = sorted[k];
    let mut sk = Skeleton {
        width: img.width(),
        height: img.height(),
        bits: mag.iter().map(|m| *m > thr).collect(),
    };
    thin_once(&mut sk);
    sk
}

/// Integer shift `(dx, dy)` such that `b(x+dx, y+dy)` best matches `a(x, y)`,
/// with the peak as the fraction of `a`'s in-bounds points that hit `b`.
/// Ties go to the smaller displacement.
pub fn estimate_shift(a: &Skeleton, b: &Skeleton, radius: usize) -> ((i32, i32), f64) {
    let r = radius as isize;
    let side = 2 * radius + 1;
    let mut hits = vec![0u32; side * side];
    let mut valid = vec![0u32; side * side];
    for y in 0..a.height as isize {
        for x in 0..a.width as isize {
            if !a.bits[y as usize * a.width + x as usize] {
                continue;
            }
            for dy in -r..=r {
                let yy = y + dy;
                if yy < 0 || yy >= b.height as isize {
                    continue;
                }
                let row = (dy + r) as usize * side;
                for dx in -r..=r {
                    let xx = x + dx;
                    if xx < 0 || xx >= b.width as isize {
                        continue;
                    }
                    let k = row + (dx + r) as usize;
                    valid[k] += 1;
                    if b.bits[yy as usize * b.width + xx as usize] {
                        hits[k] += 1;
                    }
                }
            }
        }
    }
    let mut best = ((0, 0), -1.0f64, usize::MAX);
    for dy in -r..=r {
        for dx in -r..=r {
            let k = (dy + r) as usize * side + (dx + r) as usize;
            let score = if valid[k] == 0 { 0.0 } else { hits[k] as f64 / valid[k] as f64 };
            let dist = dx.unsigned_abs() + dy.unsigned_abs();
            if score > best.1 || (score == best.1 && dist < best.2) {
                best = ((dx as i32, dy as i32), score, dist);
            }
        }
    }
    (best.0, best.1.max(0.0))
}

/// Rejects the pair as misaligned when the estimated shift exceeds
/// `max_shift` on either axis.
pub fn skeleton_shift_filter(a: &ImageBuffer, b: &ImageBuffer, cfg: &ShiftConfig) -> Result<FilterVerdict> {
    if !a.same_size(b) {
        return Err(Error::Shape(format!(
            "alignment check needs equal sizes, got {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if cfg.search_radius < cfg.max_shift {
        return Err(Error::Param(format!(
            "search radius {} below max shift {}",
            cfg.search_radius, cfg.max_shift
        )));
    }
    let sa = edge_skeleton(a, cfg.edge_quantile);
    let sb = edge_skeleton(b, cfg.edge_quantile);
    let (da, db) = (sa.density(), sb.density());
    if da < cfg.min_density || db < cfg.min_density {
        return Ok(FilterVerdict::reject(Reason::ExternalReject)
            .with("skeleton_density_a", da)
            .with("skeleton_density_b", db));
    }
    let ((dx, dy), peak) = estimate_shift(&sa, &sb, cfg.search_radius);
    let ok = dx.unsigned_abs() as usize <= cfg.max_shift && dy.unsigned_abs() as usize <= cfg.max_shift;
    Ok(FilterVerdict::from_check(ok, Reason::Misaligned)
        .with("dx", dx as f64)
        .with("dy", dy as f64)
        .with("peak", peak)
        .with("skeleton_density_a", da)
        .with("skeleton_density_b", db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::gen_scene;
    use crate::degrade::filters::translate;
    use crate::degrade::{apply_noise, NoiseSpec};
    use crate::seed::SeedTree;

    fn cfg(radius: usize, max_shift: usize) -> ShiftConfig {
        ShiftConfig {
            search_radius: radius,
            max_shift,
            ..ShiftConfig::default()
        }
    }

    #[test]
    fn self_alignment() {
        let a = gen_scene(0, 96, 96).image;
        let v = skeleton_shift_filter(&a, &a, &cfg(15, 0)).unwrap();
        assert!(v.pass);
        assert_eq!((v.measurements["dx"], v.measurements["dy"]), (0.0, 0.0));
    }

    #[test]
    fn detects_translation() {
        let a = gen_scene(1, 128, 128).image;
        let b = translate(&a, 3, -2);
        let v = skeleton_shift_filter(&a, &b, &cfg(15, 1)).unwrap();
        assert!(!v.pass);
        assert_eq!(v.reason, Reason::Misaligned);
        assert!((v.measurements["dx"] - 3.0).abs() <= 1.0, "{:?}", v.measurements);
        assert!((v.measurements["dy"] + 2.0).abs() <= 1.0, "{:?}", v.measurements);
    }

    #[test]
    fn robust_to_noise() {
        let a = gen_scene(2, 128, 128).image;
        let b = apply_noise(&a, &NoiseSpec::Gaussian { sigma: 0.05 }, None, &SeedTree::new(3)).unwrap();
        let v = skeleton_shift_filter(&a, &b, &cfg(15, 2)).unwrap();
        assert!(v.pass, "{:?}", v.measurements);
        assert!(v.measurements["dx"].abs() <= 1.0 && v.measurements["dy"].abs() <= 1.0);
    }

    #[test]
    fn flat_images_are_indeterminate() {
        let a = ImageBuffer::filled(64, 64, 3, 0.5);
        let v = skeleton_shift_filter(&a, &a, &cfg(5, 1)).unwrap();
        assert_eq!(v.reason, Reason::ExternalReject);
    }

    #[test]
    fn shape_and_param_errors() {
        let a = ImageBuffer::new(8, 8, 3);
        let b = ImageBuffer::new(9, 8, 3);
        assert!(matches!(skeleton_shift_filter(&a, &b, &cfg(3, 1)), Err(Error::Shape(_))));
        assert!(matches!(skeleton_shift_filter(&a, &a, &cfg(1, 3)), Err(Error::Param(_))));
    }

    #[test]
    fn thinning_reduces_thick_line() {
        let mut sk = Skeleton {
            width: 12,
            height: 12,
            bits: (0..144).map(|i| (4..8).contains(&(i % 12)) && (2..10).contains(&(i / 12))).collect(),
        };
        let before = sk.count();
        thin_once(&mut sk);
        assert!(sk.count() < before && sk.count() > 0);
    }
}
