//! Ingested per-image sidecars: depth maps and segmentation masks.

use std::collections::BTreeMap;
use std::path::Path;

use crate::buffer::{load_image, ImageBuffer};
use crate::degrade::filters::{resize, Interp};
use crate::error::{Error, Result};

/// Per-pixel depth normalized to `[0, 1]`; 0 is nearest.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub d: Vec<f32>,
}

impl DepthMap {
    pub fn constant(width: usize, height: usize, value: f32) -> Self {
        DepthMap {
            width,
            height,
            d: vec![value.clamp(0.0, 1.0); width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        let d = (0..width * height).map(|i| f(i % width, i / width).clamp(0.0, 1.0)).collect();
        DepthMap { width, height, d }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.d[y * self.width + x]
    }

    /// Linear normalization of the first channel: 16-bit files map
    /// 0..65535 onto 0..1, 8-bit files 0..255.
    pub fn from_image(img: &ImageBuffer) -> Self {
        let ch = img.channel(0);
        DepthMap {
            width: img.width(),
            height: img.height(),
            d: ch.into_vec(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_image(&load_image(path)?))
    }

    /// Bilinear resample to the paired image's size.
    pub fn resized(&self, width: usize, height: usize) -> DepthMap {
        if self.width == width && self.height == height {
            return self.clone();
        }
        let img = ImageBuffer::from_vec(self.width, self.height, 1, self.d.clone()).expect("valid depth");
        let r = resize(&img, width, height, Interp::Bilinear);
        DepthMap {
            width,
            height,
            d: r.into_vec(),
        }
    }

    pub fn to_image(&self) -> ImageBuffer {
        ImageBuffer::from_vec(self.width, self.height, 1, self.d.clone()).expect("valid depth")
    }
}

/// Region labels normalized to the contiguous set `0..K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegMask {
    pub width: usize,
    pub height: usize,
    pub region_id: Vec<u32>,
    pub regions: u32,
}

impl SegMask {
    /// Relabels arbitrary ids to `0..K` in ascending order of the raw id.
    pub fn from_raw(width: usize, height: usize, raw: &[u32]) -> Result<Self> {
        if raw.len() != width * height {
            return Err(Error::Shape(format!("mask has {} labels, expected {}", raw.len(), width * height)));
        }
        let mut remap = BTreeMap::new();
        for &r in raw {
            remap.entry(r).or_insert(0u32);
        }
        for (k, v) in remap.values_mut().enumerate() {
            *v = k as u32;
        }
        Ok(SegMask {
            width,
            height,
            region_id: raw.iter().map(|r| remap[r]).collect(),
            regions: remap.len() as u32,
        })
    }

    /// Region id = 8-bit pixel value of the first channel.
    pub fn load(path: &Path) -> Result<Self> {
        let img = load_image(path)?;
        let raw: Vec<u32> = img.channel(0).data().iter().map(|&v| (v * 255.0).round() as u32).collect();
        Self::from_raw(img.width(), img.height(), &raw)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u32 {
        self.region_id[y * self.width + x]
    }

    /// Nearest-neighbor resample.
    pub fn resized(&self, width: usize, height: usize) -> SegMask {
        if self.width == width && self.height == height {
            return self.clone();
        }
        let raw: Vec<u32> = (0..width * height)
            .map(|i| {
                let sx = (((i % width) as f64 + 0.5) * self.width as f64 / width as f64) as usize;
                let sy = (((i / width) as f64 + 0.5) * self.height as f64 / height as f64) as usize;
                self.at(sx.min(self.width - 1), sy.min(self.height - 1))
            })
            .collect();
        SegMask::from_raw(width, height, &raw).expect("sizes match")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buffer::encode_png16_gray;

    #[test]
    fn mask_labels_become_contiguous() {
        let m = SegMask::from_raw(4, 1, &[200, 7, 7, 42]).unwrap();
        assert_eq!(m.region_id, vec![2, 0, 0, 1]);
        assert_eq!(m.regions, 3);
        assert!(SegMask::from_raw(2, 2, &[0; 3]).is_err());
    }

    #[test]
    fn sixteen_bit_depth_normalizes_linearly() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("depth.png");
        let img = ImageBuffer::from_fn(4, 1, 1, |x, _, _| x as f32 / 3.0);
        std::fs::write(&p, encode_png16_gray(&img).unwrap()).unwrap();
        let depth = DepthMap::load(&p).unwrap();
        assert_eq!(depth.d.len(), 4);
        assert_eq!(depth.at(0, 0), 0.0);
        assert_eq!(depth.at(3, 0), 1.0);
        assert!((depth.at(1, 0) - 1.0 / 3.0).abs() < 1e-4);
        let r = depth.resized(8, 2);
        assert_eq!((r.width, r.height), (8, 2));
    }
}
