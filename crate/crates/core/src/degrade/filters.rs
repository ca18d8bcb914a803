//! Convolution and resampling kernels shared by the operators and metrics.

use crate::buffer::ImageBuffer;

/// Mirror index without repeating the edge sample (`-1 → 1`).
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// Truncated (±ceil(3σ)) Gaussian renormalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(0.0) as isize;
    let w: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|v| (v / sum) as f32).collect()
}

/// Fixed-length Gaussian window (odd `len`) renormalized to sum 1.
pub fn gaussian_window(len: usize, sigma: f64) -> Vec<f32> {
    let r = (len / 2) as isize;
    let w: Vec<f64> = (-r..=r)
        .map(|x| (-(x as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|v| (v / sum) as f32).collect()
}

/// Convolves interleaved samples along x then y with odd-length kernels,
/// using reflect padding. No clamping, so signed data is fine.
pub fn convolve_raw(src: &[f32], w: usize, h: usize, ch: usize, kx: &[f32], ky: &[f32]) -> Vec<f32> {
    let rx = (kx.len() / 2) as isize;
    let ry = (ky.len() / 2) as isize;
    let mut tmp = vec![0f32; src.len()];
    for y in 0..h {
        let row = &src[y * w * ch..(y + 1) * w * ch];
        let out = &mut tmp[y * w * ch..(y + 1) * w * ch];
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0f32;
                for (k, &wt) in kx.iter().enumerate() {
                    let sx = reflect(x as isize + k as isize - rx, w);
                    acc += wt * row[sx * ch + c];
                }
                out[x * ch + c] = acc;
            }
        }
    }
    let mut out = vec![0f32; src.len()];
    let stride = w * ch;
    for y in 0..h {
        let dst = &mut out[y * stride..(y + 1) * stride];
        for (k, &wt) in ky.iter().enumerate() {
            let sy = reflect(y as isize + k as isize - ry, h);
            let srow = &tmp[sy * stride..(sy + 1) * stride];
            for (d, s) in dst.iter_mut().zip(srow) {
                *d += wt * s;
            }
        }
    }
    out
}

pub fn convolve_separable(img: &ImageBuffer, kx: &[f32], ky: &[f32]) -> ImageBuffer {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let out = convolve_raw(img.data(), w, h, ch, kx, ky);
    let mut res = ImageBuffer::from_vec(w, h, ch, out).expect("shape preserved");
    res.linear = img.linear;
    res
}

/// A 2-D kernel stored as its non-zero taps `(dx, dy, weight)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseKernel {
    pub taps: Vec<(isize, isize, f32)>,
}

impl SparseKernel {
    pub fn sum(&self) -> f64 {
        self.taps.iter().map(|t| t.2 as f64).sum()
    }
}

/// Correlates with a sparse kernel (reflect padding). The kernels used here
/// are point-symmetric, so this equals convolution.
pub fn convolve_sparse(img: &ImageBuffer, kernel: &SparseKernel) -> ImageBuffer {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let src = img.data();
    let mut out = vec![0f32; src.len()];
    for &(dx, dy, wt) in &kernel.taps {
        for y in 0..h {
            let sy = reflect(y as isize + dy, h);
            let srow = &src[sy * w * ch..(sy + 1) * w * ch];
            let drow = &mut out[y * w * ch..(y + 1) * w * ch];
            for x in 0..w {
                let sx = reflect(x as isize + dx, w);
                for c in 0..ch {
                    drow[x * ch + c] += wt * srow[sx * ch + c];
                }
            }
        }
    }
    let mut res = ImageBuffer::from_vec(w, h, ch, out).expect("shape preserved");
    res.linear = img.linear;
    res
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    Nearest,
    Bilinear,
    Bicubic,
}

impl std::str::FromStr for Interp {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(Interp::Nearest),
            "bilinear" => Ok(Interp::Bilinear),
            "bicubic" => Ok(Interp::Bicubic),
            _ => Err(crate::error::Error::Param(format!("unknown interpolation {s:?}"))),
        }
    }
}

fn triangle(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

/// Keys cubic with a = -0.5.
fn keys_cubic(x: f64) -> f64 {
    let a = -0.5;
    let x = x.abs();
    if x < 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Per-output-sample taps `(first source index, weights)` along one axis.
fn axis_weights(src: usize, dst: usize, interp: Interp) -> Vec<(Vec<usize>, Vec<f32>)> {
    let scale = dst as f64 / src as f64;
    let stretch = (1.0 / scale).max(1.0);
    (0..dst)
        .map(|i| {
            let center = (i as f64 + 0.5) / scale - 0.5;
            match interp {
                Interp::Nearest => {
                    let s = ((i as f64 + 0.5) / scale).floor() as usize;
                    (vec![s.min(src - 1)], vec![1.0])
                }
                Interp::Bilinear | Interp::Bicubic => {
                    let (f, support): (fn(f64) -> f64, f64) = if interp == Interp::Bilinear {
                        (triangle, 1.0)
                    } else {
                        (keys_cubic, 2.0)
                    };
                    let support = support * stretch;
                    let lo = (center - support).ceil() as isize;
                    let hi = (center + support).floor() as isize;
                    let mut idx = Vec::new();
                    let mut wts = Vec::new();
                    for k in lo..=hi {
                        let wt = f((k as f64 - center) / stretch);
                        if wt != 0.0 {
                            idx.push(k.clamp(0, src as isize - 1) as usize);
                            wts.push(wt);
                        }
                    }
                    let sum: f64 = wts.iter().sum();
                    (idx, wts.into_iter().map(|v| (v / sum) as f32).collect())
                }
            }
        })
        .collect()
}

/// Resamples to `new_w × new_h`. Down-scaling widens the filter support so
/// that bilinear and bicubic are area-aware.
pub fn resize(img: &ImageBuffer, new_w: usize, new_h: usize, interp: Interp) -> ImageBuffer {
    assert!(new_w > 0 && new_h > 0);
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    if new_w == w && new_h == h {
        return img.clone();
    }
    let xw = axis_weights(w, new_w, interp);
    let yw = axis_weights(h, new_h, interp);
    let src = img.data();
    let mut tmp = vec![0f32; new_w * h * ch];
    for y in 0..h {
        for (x, (idx, wts)) in xw.iter().enumerate() {
            for c in 0..ch {
                let mut acc = 0f32;
                for (&sx, &wt) in idx.iter().zip(wts) {
                    acc += wt * src[(y * w + sx) * ch + c];
                }
                tmp[(y * new_w + x) * ch + c] = acc;
            }
        }
    }
    let mut out = vec![0f32; new_w * new_h * ch];
    let stride = new_w * ch;
    for (y, (idx, wts)) in yw.iter().enumerate() {
        let dst = &mut out[y * stride..(y + 1) * stride];
        for (&sy, &wt) in idx.iter().zip(wts) {
            let srow = &tmp[sy * stride..(sy + 1) * stride];
            for (d, s) in dst.iter_mut().zip(srow) {
                *d += wt * s;
            }
        }
    }
    let mut res = ImageBuffer::from_vec(new_w, new_h, ch, out).expect("shape computed");
    res.linear = img.linear;
    res
}

/// Integer translation: `out(x, y) = img(x - dx, y - dy)` with reflect padding.
pub fn translate(img: &ImageBuffer, dx: isize, dy: isize) -> ImageBuffer {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut out = img.clone();
    for y in 0..h {
        let sy = reflect(y as isize - dy, h);
        for x in 0..w {
            let sx = reflect(x as isize - dx, w);
            for c in 0..ch {
                let v = img.get(sx, sy, c);
                out.set(x, y, c, v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_indices() {
        let got: Vec<_> = (-3..8).map(|i| reflect(i, 5)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(reflect(-7, 1), 0);
        assert_eq!(reflect(-20, 3), 0);
    }

    #[test]
    fn gaussian_kernel_sums_to_one() {
        for s in [0.3, 1.0, 2.5, 7.0] {
            let k = gaussian_kernel(s);
            assert_eq!(k.len(), 2 * (3.0 * s).ceil() as usize + 1);
            assert!((k.iter().map(|&v| v as f64).sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn same_size_resize_is_identity() {
        let img = ImageBuffer::from_fn(13, 7, 3, |x, y, c| ((x * 5 + y * 3 + c) % 11) as f32 / 10.0);
        for interp in [Interp::Nearest, Interp::Bilinear, Interp::Bicubic] {
            assert_eq!(resize(&img, 13, 7, interp), img);
        }
    }

    #[test]
    fn resize_preserves_constants() {
        let img = ImageBuffer::filled(40, 30, 1, 0.6);
        for interp in [Interp::Nearest, Interp::Bilinear, Interp::Bicubic] {
            for (nw, nh) in [(10, 7), (97, 61)] {
                let r = resize(&img, nw, nh, interp);
                assert!(r.data().iter().all(|&v| (v - 0.6).abs() < 1e-5));
            }
        }
    }

    #[test]
    fn translate_moves_content() {
        let img = ImageBuffer::from_fn(9, 9, 1, |x, y, _| if x == 4 && y == 4 { 1.0 } else { 0.0 });
        let t = translate(&img, 2, -1);
        assert_eq!(t.get(6, 3, 0), 1.0);
        assert_eq!(t.data().iter().filter(|&&v| v > 0.0).count(), 1);
    }
}
