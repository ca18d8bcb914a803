use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::buffer::{load_image, ImageBuffer};
use crate::error::{Error, Result};

/// A directory of collected overlay assets, all widened to RGBA.
#[derive(Clone, Debug, Default)]
pub struct PatternBank {
    pub entries: Vec<ImageBuffer>,
    pub tags: Vec<String>,
    pub scale_levels: BTreeSet<(usize, usize)>,
    pub premultiplied: bool,
    /// Files that could not be decoded.
    pub skipped: Vec<PathBuf>,
}

impl PatternBank {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry `id`, wrapping around the bank size.
    pub fn get(&self, id: u32) -> &ImageBuffer {
        &self.entries[id as usize % self.entries.len()]
    }
}

/// Widens to RGBA. Images without alpha get alpha = luminance.
pub fn to_rgba_with_luma_alpha(img: &ImageBuffer) -> ImageBuffer {
    match img.channels() {
        4 => img.clone(),
        _ => {
            let lum = img.luminance();
            let rgb = img.to_rgb();
            ImageBuffer::from_fn(img.width(), img.height(), 4, |x, y, c| {
                if c == 3 {
                    lum.get(x, y, 0)
                } else {
                    rgb.get(x, y, c)
                }
            })
        }
    }
}

/// Loads every decodable image in `dir` (sorted by file name). Undecodable
/// files are skipped with a warning.
pub fn load_pattern_bank(dir: &Path, kind_tag: &str) -> Result<PatternBank> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut bank = PatternBank::default();
    for p in paths {
        match load_image(&p) {
            Ok(img) => {
                bank.scale_levels.insert((img.width(), img.height()));
                bank.entries.push(to_rgba_with_luma_alpha(&img));
                bank.tags.push(kind_tag.to_string());
            }
            Err(e) => {
                log::warn!("skipping {} in {kind_tag} bank: {e}", p.display());
                bank.skipped.push(p);
            }
        }
    }
    if bank.entries.is_empty() {
        return Err(Error::Bank(format!("no usable images in {}", dir.display())));
    }
    Ok(bank)
}
