use serde::{Deserialize, Serialize};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};

use super::filters::{resize, Interp};
use super::jpeg::apply_jpeg;

pub const MIN_CHAIN_SIDE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResizeStep {
    pub scale: f64,
    pub interp: Interp,
}

fn scaled(n: usize, s: f64) -> usize {
    ((n as f64 * s).round() as usize).max(1)
}

/// Applies every step except the restoration; returns the intermediate.
fn resize_steps(img: &ImageBuffer, chain: &[ResizeStep]) -> Result<ImageBuffer> {
    let mut cur = img.clone();
    for step in chain {
        if !(step.scale > 0.0) || !step.scale.is_finite() {
            return Err(Error::Param(format!("resize scale {} must be > 0", step.scale)));
        }
        let (w, h) = (scaled(cur.width(), step.scale), scaled(cur.height(), step.scale));
        cur = resize(&cur, w, h, step.interp);
    }
    if cur.width() < MIN_CHAIN_SIDE || cur.height() < MIN_CHAIN_SIDE {
        return Err(Error::Param(format!(
            "resize chain reaches {}x{}, below {MIN_CHAIN_SIDE}x{MIN_CHAIN_SIDE}",
            cur.width(),
            cur.height()
        )));
    }
    Ok(cur)
}

fn restore(cur: ImageBuffer, img: &ImageBuffer, chain: &[ResizeStep]) -> ImageBuffer {
    match chain.last() {
        Some(last) if !cur.same_size(img) => resize(&cur, img.width(), img.height(), last.interp),
        _ => cur,
    }
}

/// Sequential resampling, then back to the original size with the last
/// step's interpolation.
pub fn apply_resize_chain(img: &ImageBuffer, chain: &[ResizeStep]) -> Result<ImageBuffer> {
    let cur = resize_steps(img, chain)?;
    Ok(restore(cur, img, chain))
}

/// Web-style recompression: the resize chain (restored to the original
/// size), then JPEG, so the block grid lines up with the output.
/// `quality = None` skips the codec.
pub fn apply_compression(img: &ImageBuffer, quality: Option<u8>, chain: &[ResizeStep]) -> Result<ImageBuffer> {
    let cur = apply_resize_chain(img, chain)?;
    match quality {
        Some(q) => apply_jpeg(&cur, q),
        None => Ok(cur),
    }
}
