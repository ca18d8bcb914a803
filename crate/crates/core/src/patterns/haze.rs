use rand::Rng as _;

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::seed::SeedTree;

/// Number of ids in the procedural haze-texture bank.
pub const HAZE_BANK_SIZE: u32 = 200;

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Octave-summed value noise normalized to `[0, 1]`.
///
/// Octave 1 uses a lattice spacing of a quarter of the longer side; each
/// further octave halves the spacing and the amplitude.
pub fn gen_haze_texture(width: usize, height: usize, octaves: u32, seed: &SeedTree) -> Result<ImageBuffer> {
    if !(1..=6).contains(&octaves) {
        return Err(Error::Param(format!("octaves {octaves} outside 1..=6")));
    }
    let size = width.max(height).max(1) as f64;
    let mut field = vec![0f64; width * height];
    for o in 0..octaves {
        let cell = (size / 4.0) / 2f64.powi(o as i32);
        let cell = cell.max(1.0);
        let amp = 0.5f64.powi(o as i32);
        let gw = (width as f64 / cell).ceil() as usize + 2;
        let gh = (height as f64 / cell).ceil() as usize + 2;
        let mut rng = seed.child(o as u64).rng();
        let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.gen::<f64>()).collect();
        for y in 0..height {
            let fy = y as f64 / cell;
            let iy = fy.floor() as usize;
            let ty = smoothstep(fy - iy as f64);
            for x in 0..width {
                let fx = x as f64 / cell;
                let ix = fx.floor() as usize;
                let tx = smoothstep(fx - ix as f64);
                let v00 = lattice[iy * gw + ix];
                let v10 = lattice[iy * gw + ix + 1];
                let v01 = lattice[(iy + 1) * gw + ix];
                let v11 = lattice[(iy + 1) * gw + ix + 1];
                let top = v00 + (v10 - v00) * tx;
                let bot = v01 + (v11 - v01) * tx;
                field[y * width + x] += amp * (top + (bot - top) * ty);
            }
        }
    }
    let lo = field.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    let data = field.into_iter().map(|v| ((v - lo) / span) as f32).collect();
    ImageBuffer::from_vec(width, height, 1, data)
}

/// Texture `id` of the procedural haze bank.
pub fn haze_texture_from_bank(id: u32, width: usize, height: usize) -> Result<ImageBuffer> {
    let seed = SeedTree::new(0x4A2E).child(id as u64);
    let octaves = 2 + id % 4;
    gen_haze_texture(width, height, octaves, &seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_octave_is_smooth() {
        let t = gen_haze_texture(256, 256, 1, &SeedTree::new(4)).unwrap();
        let mut max_step = 0f32;
        for y in 0..256 {
            for x in 0..256 {
                if x + 1 < 256 {
                    max_step = max_step.max((t.get(x + 1, y, 0) - t.get(x, y, 0)).abs());
                }
                if y + 1 < 256 {
                    max_step = max_step.max((t.get(x, y + 1, 0) - t.get(x, y, 0)).abs());
                }
            }
        }
        assert!(max_step <= 0.2, "{max_step}");
    }

    #[test]
    fn normalized_to_unit_range() {
        let t = gen_haze_texture(100, 60, 4, &SeedTree::new(9)).unwrap();
        let lo = t.data().iter().cloned().fold(1.0, f32::min);
        let hi = t.data().iter().cloned().fold(0.0, f32::max);
        assert!(lo < 1e-6 && hi > 1.0 - 1e-6);
    }

    #[test]
    fn deterministic_and_octave_checked() {
        let s = SeedTree::new(2);
        assert_eq!(gen_haze_texture(33, 21, 3, &s).unwrap(), gen_haze_texture(33, 21, 3, &s).unwrap());
        assert!(gen_haze_texture(8, 8, 0, &s).is_err());
        assert!(gen_haze_texture(8, 8, 7, &s).is_err());
    }

    #[test]
    fn correlation_length_at_least_an_eighth() {
        let n = 128;
        let t = gen_haze_texture(n, n, 1, &SeedTree::new(11)).unwrap();
        let mean = t.mean();
        let var: f64 = t.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n * n) as f64;
        let lag = n / 8;
        let mut cov = 0.0;
        for y in 0..n {
            for x in 0..n - lag {
                cov += (t.get(x, y, 0) as f64 - mean) * (t.get(x + lag, y, 0) as f64 - mean);
            }
        }
        cov /= (n * (n - lag)) as f64;
        assert!(cov / var > 0.3, "autocorrelation at n/8 = {}", cov / var);
    }
}
