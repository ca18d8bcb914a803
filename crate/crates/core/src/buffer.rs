//! Floating-point image buffers and file I/O.
//!
//! Every pixel lives in `[0, 1]` as `f32`, row-major and channel-interleaved.
//! Conversion to 8/16-bit integers only happens at file boundaries.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageEncoder, ImageReader};

use crate::error::{Error, Result};

/// Interleaved `H × W × C` image with samples in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
    /// `true` when samples are linear-light rather than sRGB-encoded.
    pub linear: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Jpeg,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "png" => Some(ImageFormat::Png),
            "jpg" | "jpeg" => Some(ImageFormat::Jpeg),
            _ => None,
        }
    }
}

fn check_channels(channels: usize) -> Result<()> {
    if matches!(channels, 1 | 3 | 4) {
        Ok(())
    } else {
        Err(Error::Shape(format!("unsupported channel count {channels}")))
    }
}

#[inline]
fn sanitize(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

impl ImageBuffer {
    /// Zero-filled buffer.
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!(matches!(channels, 1 | 3 | 4), "channels must be 1, 3 or 4");
        ImageBuffer {
            width,
            height,
            channels,
            data: vec![sanitize(value); width * height * channels],
            linear: false,
        }
    }

    /// Wraps raw samples, clamping them into `[0, 1]` (NaN becomes 0).
    pub fn from_vec(width: usize, height: usize, channels: usize, mut data: Vec<f32>) -> Result<Self> {
        check_channels(channels)?;
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        data.iter_mut().for_each(|v| *v = sanitize(*v));
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
            linear: false,
        })
    }

    /// Builds a buffer by evaluating `f(x, y, c)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut img = Self::new(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    let i = (y * width + x) * channels + c;
                    img.data[i] = sanitize(f(x, y, c));
                }
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Mutable access to the raw samples. Callers must keep them in `[0, 1]`;
    /// [`ImageBuffer::clamp`] restores the invariant.
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        let i = self.index(x, y, c);
        self.data[i] = sanitize(v);
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn same_size(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn clamp(&mut self) {
        self.data.iter_mut().for_each(|v| *v = sanitize(*v));
    }

    /// Applies `f` to every sample, clamping the result.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> ImageBuffer {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = sanitize(f(*v)));
        out
    }

    /// Extracts a single channel plane.
    pub fn channel(&self, c: usize) -> ImageBuffer {
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
            linear: self.linear,
        }
    }

    /// Color channels only (alpha dropped, gray kept as-is).
    pub fn color_channels(&self) -> usize {
        if self.channels == 4 {
            3
        } else {
            self.channels
        }
    }

    /// Rec. 709 luma computed on the encoded values.
    pub fn luminance(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|p| 0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2])
            .map(sanitize)
            .collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
            linear: self.linear,
        }
    }

    /// Converts to three channels, replicating gray and dropping alpha.
    pub fn to_rgb(&self) -> ImageBuffer {
        match self.channels {
            3 => self.clone(),
            1 => ImageBuffer::from_fn(self.width, self.height, 3, |x, y, _| self.get(x, y, 0)),
            _ => ImageBuffer::from_fn(self.width, self.height, 3, |x, y, c| self.get(x, y, c)),
        }
    }

    /// Rounds every sample through 8-bit storage, as a PNG write/read would.
    pub fn quantize8(&self) -> ImageBuffer {
        self.map(|v| (v * 255.0).round() / 255.0)
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &ImageBuffer) -> f32 {
        assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }

    /// sRGB-encoded → linear light. No-op if already linear.
    pub fn to_linear(&self) -> ImageBuffer {
        if self.linear {
            return self.clone();
        }
        let mut out = self.map_color(srgb_to_linear);
        out.linear = true;
        out
    }

    /// Linear light → sRGB-encoded. No-op if already encoded.
    pub fn to_srgb(&self) -> ImageBuffer {
        if !self.linear {
            return self.clone();
        }
        let mut out = self.map_color(linear_to_srgb);
        out.linear = false;
        out
    }

    fn map_color(&self, f: fn(f32) -> f32) -> ImageBuffer {
        let mut out = self.clone();
        let cc = self.color_channels();
        for px in out.data.chunks_exact_mut(self.channels) {
            for v in px.iter_mut().take(cc) {
                *v = sanitize(f(*v));
            }
        }
        out
    }
}

pub fn srgb_to_linear(v: f32) -> f32 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn linear_to_srgb(v: f32) -> f32 {
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn decode_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(source) => Error::io(path, source),
        image::ImageError::Unsupported(u) => Error::Format(format!("{}: {u}", path.display())),
        other => Error::Unreadable {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Decodes a PNG or JPEG (8- or 16-bit) into `[0, 1]` samples.
///
/// Grayscale stays single-channel; gray+alpha is widened to RGBA.
pub fn load_image(path: &Path) -> Result<ImageBuffer> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let reader = ImageReader::new(Cursor::new(&bytes))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(image::ImageFormat::Png) | Some(image::ImageFormat::Jpeg) => {}
        Some(other) => {
            return Err(Error::Format(format!("{}: unsupported format {other:?}", path.display())))
        }
        None => return Err(Error::Format(format!("{}: unrecognized image data", path.display()))),
    }
    let img = reader.decode().map_err(|e| decode_error(path, e))?;
    Ok(from_dynamic(img))
}

fn from_dynamic(img: DynamicImage) -> ImageBuffer {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let scale8 = |v: u8| v as f32 / 255.0;
    let scale16 = |v: u16| v as f32 / 65535.0;
    let (channels, data): (usize, Vec<f32>) = match img {
        DynamicImage::ImageLuma8(b) => (1, b.into_raw().into_iter().map(scale8).collect()),
        DynamicImage::ImageRgb8(b) => (3, b.into_raw().into_iter().map(scale8).collect()),
        DynamicImage::ImageRgba8(b) => (4, b.into_raw().into_iter().map(scale8).collect()),
        DynamicImage::ImageLuma16(b) => (1, b.into_raw().into_iter().map(scale16).collect()),
        DynamicImage::ImageRgb16(b) => (3, b.into_raw().into_iter().map(scale16).collect()),
        DynamicImage::ImageRgba16(b) => (4, b.into_raw().into_iter().map(scale16).collect()),
        DynamicImage::ImageLumaA16(_) | DynamicImage::ImageRgb32F(_) | DynamicImage::ImageRgba32F(_) => {
            (4, img.to_rgba16().into_raw().into_iter().map(scale16).collect())
        }
        other => (4, other.to_rgba8().into_raw().into_iter().map(scale8).collect()),
    };
    ImageBuffer {
        width: w,
        height: h,
        channels,
        data,
        linear: false,
    }
}

fn to_u8(v: f32) -> u8 {
    (sanitize(v) * 255.0).round() as u8
}

/// Encodes `img` as an 8-bit PNG in memory.
pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let img = img.to_srgb();
    let raw: Vec<u8> = img.data.iter().map(|&v| to_u8(v)).collect();
    let color = match img.channels {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        _ => image::ExtendedColorType::Rgba8,
    };
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(&raw, img.width as u32, img.height as u32, color)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(out)
}

/// Encodes a 16-bit grayscale PNG of the first channel (used for depth maps).
pub fn encode_png16_gray(img: &ImageBuffer) -> Result<Vec<u8>> {
    let raw: Vec<u8> = (0..img.pixel_count())
        .flat_map(|i| {
            let v = (sanitize(img.data[i * img.channels]) * 65535.0).round() as u16;
            v.to_be_bytes()
        })
        .collect();
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(&raw, img.width as u32, img.height as u32, image::ExtendedColorType::L16)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(out)
}

/// Writes `img` to `path`. JPEG uses the same codec as the compression
/// degradation; `quality` is ignored for PNG.
pub fn save_image(img: &ImageBuffer, path: &Path, format: ImageFormat, quality: u8) -> Result<()> {
    let bytes = match format {
        ImageFormat::Png => encode_png(img)?,
        ImageFormat::Jpeg => {
            if !(1..=100).contains(&quality) {
                return Err(Error::Param(format!("jpeg quality {quality} outside 1..=100")));
            }
            crate::degrade::jpeg::encode_jpeg(img, quality)?
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes bytes to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
