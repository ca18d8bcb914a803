use std::f64::consts::{PI, TAU};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::seed::SeedTree;

/// Frequency band of a generated pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoireScale {
    Fine,
    Medium,
    Coarse,
}

impl MoireScale {
    pub const ALL: [MoireScale; 3] = [MoireScale::Fine, MoireScale::Medium, MoireScale::Coarse];

    /// Carrier frequency band in cycles per image.
    pub fn band(self) -> (f64, f64) {
        match self {
            MoireScale::Fine => (120.0, 240.0),
            MoireScale::Medium => (40.0, 120.0),
            MoireScale::Coarse => (10.0, 40.0),
        }
    }
}

/// Two superimposed linear gratings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoireParams {
    pub freq_a: f64,
    pub freq_b: f64,
    pub angle_a: f64,
    pub angle_b: f64,
    pub phase_a: f64,
    pub phase_b: f64,
    pub scale: MoireScale,
    pub chroma_gain: f64,
}

/// Number of ids in the procedural moiré bank.
pub const MOIRE_BANK_SIZE: u32 = 3000;
const MOIRE_BANK_ROOT: u64 = 0x4D4F_4952_45;

impl MoireParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.freq_a,
            self.freq_b,
            self.angle_a,
            self.angle_b,
            self.phase_a,
            self.phase_b,
            self.chroma_gain,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Param("moiré parameters must be finite".into()));
        }
        if self.freq_a == self.freq_b && self.angle_a == self.angle_b {
            return Err(Error::Param("identical gratings produce no interference".into()));
        }
        if !(0.0..=1.0).contains(&self.chroma_gain) {
            return Err(Error::Param(format!("chroma_gain {} outside [0, 1]", self.chroma_gain)));
        }
        Ok(())
    }

    /// Draws a near-frequency, near-parallel grating pair inside `scale`'s band.
    pub fn random(scale: MoireScale, seed: &SeedTree) -> Self {
        let mut rng = seed.rng();
        let (lo, hi) = scale.band();
        let freq_a = rng.gen_range(lo..hi);
        let detune = rng.gen_range(0.02..0.08) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let angle_a = rng.gen_range(0.0..PI);
        let tilt = rng.gen_range(-0.08..0.08);
        MoireParams {
            freq_a,
            freq_b: freq_a * (1.0 + detune),
            angle_a,
            angle_b: angle_a + tilt,
            phase_a: rng.gen_range(0.0..TAU),
            phase_b: rng.gen_range(0.0..TAU),
            scale,
            chroma_gain: rng.gen_range(0.0..1.0),
        }
    }

    /// Pattern `id` of the procedural bank; scales cycle fine/medium/coarse.
    pub fn from_bank_id(id: u32) -> Self {
        let scale = MoireScale::ALL[(id % 3) as usize];
        Self::random(scale, &SeedTree::new(MOIRE_BANK_ROOT).child(id as u64))
    }
}

/// `0.5 + 0.5·sin(g_a)·sin(g_b)` per channel, where each `g` is a linear
/// grating in cycles per image. `chroma_gain` rotates grating A's phase by
/// `gain·c·2π/3` on channel `c` to produce colored fringes. Alpha is 1.
pub fn gen_moire_pattern(params: &MoireParams, width: usize, height: usize) -> Result<ImageBuffer> {
    params.validate()?;
    let (ca, sa) = (params.angle_a.cos(), params.angle_a.sin());
    let (cb, sb) = (params.angle_b.cos(), params.angle_b.sin());
    let (w, h) = (width as f64, height as f64);
    let mut img = ImageBuffer::new(width, height, 4);
    for y in 0..height {
        let v = y as f64 / h;
        for x in 0..width {
            let u = x as f64 / w;
            let base_a = TAU * params.freq_a * (u * ca + v * sa) + params.phase_a;
            let gb = (TAU * params.freq_b * (u * cb + v * sb) + params.phase_b).sin();
            for c in 0..3 {
                let shift = params.chroma_gain * c as f64 * TAU / 3.0;
                let val = 0.5 + 0.5 * (base_a + shift).sin() * gb;
                img.set(x, y, c, val as f32);
            }
            img.set(x, y, 3, 1.0);
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};

    fn params(fa: f64, fb: f64, aa: f64, ab: f64) -> MoireParams {
        MoireParams {
            freq_a: fa,
            freq_b: fb,
            angle_a: aa,
            angle_b: ab,
            phase_a: 0.3,
            phase_b: 1.1,
            scale: MoireScale::Medium,
            chroma_gain: 0.0,
        }
    }

    #[test]
    fn identical_gratings_rejected() {
        assert!(gen_moire_pattern(&params(8.0, 8.0, 0.0, 0.0), 16, 16).is_err());
        assert!(gen_moire_pattern(&params(8.0, 8.0, 0.0, 0.1), 16, 16).is_ok());
    }

    #[test]
    fn bank_patterns_average_to_half() {
        for id in [0, 1, 2, 997, 2999] {
            let p = MoireParams::from_bank_id(id);
            let img = gen_moire_pattern(&p, 512, 512).unwrap();
            let mean_rgb: f64 = (0..3).map(|c| img.channel(c).mean()).sum::<f64>() / 3.0;
            assert!((mean_rgb - 0.5).abs() < 0.05, "id {id}: {mean_rgb}");
            assert!((0..img.pixel_count()).all(|i| img.data()[i * 4 + 3] == 1.0));
        }
    }

    #[test]
    fn near_frequencies_beat_at_difference() {
        let n = 128;
        let img = gen_moire_pattern(&params(20.0, 21.0, 0.0, 0.0), n, n).unwrap();
        // FFT oracle along one row: energy only at |fa-fb| and fa+fb.
        let mut row: Vec<Complex<f64>> = (0..n).map(|x| Complex::new(img.get(x, 5, 0) as f64 - 0.5, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut row);
        let mag: Vec<f64> = row.iter().take(n / 2).map(|c| c.norm()).collect();
        let mut order: Vec<usize> = (1..n / 2).collect();
        order.sort_by(|&a, &b| mag[b].partial_cmp(&mag[a]).unwrap());
        let mut top = [order[0], order[1]];
        top.sort();
        assert_eq!(top, [1, 41]);
        let floor = order[2..].iter().map(|&k| mag[k]).fold(0.0, f64::max);
        assert!(floor < 1e-6 * mag[1], "{floor}");
    }

    #[test]
    fn chroma_gain_colors_fringes() {
        let mut p = params(30.0, 32.0, 0.2, 0.2);
        let gray = gen_moire_pattern(&p, 32, 32).unwrap();
        assert!((0..32).all(|x| gray.get(x, 7, 0) == gray.get(x, 7, 2)));
        p.chroma_gain = 0.8;
        let col = gen_moire_pattern(&p, 32, 32).unwrap();
        assert!((0..32).any(|x| (col.get(x, 7, 0) - col.get(x, 7, 2)).abs() > 0.05));
    }

    #[test]
    fn generation_is_pure() {
        let p = MoireParams::from_bank_id(42);
        assert_eq!(p, MoireParams::from_bank_id(42));
        assert_eq!(gen_moire_pattern(&p, 40, 30).unwrap(), gen_moire_pattern(&p, 40, 30).unwrap());
    }
}
