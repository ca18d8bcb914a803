//! C ABI over `degradekit`.
//!
//! Every fallible call returns a [`DkStatus`]; on failure the message is
//! available from [`dk_last_error`] on the same thread. Images cross the
//! boundary as opaque [`DkImage`] handles released with [`dk_image_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use degradekit::degrade::{degrade, severity_to_params, DegradeContext, SeverityMap};
use degradekit::metrics::{final_score, heuristic_degradation_score, ms_ssim_distance, spearman};
use degradekit::patterns::DepthMap;
use degradekit::{load_image, Error, ImageBuffer, SeedTree, Severity, TaskKind};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Param = 5,
    Shape = 6,
    Unsupported = 7,
    Lookup = 8,
    Undefined = 9,
    Backend = 10,
    Panic = 11,
}

/// Opaque image handle.
pub struct DkImage(ImageBuffer);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DkStatus {
    match e {
        Error::Io { .. } | Error::Unreadable { .. } => DkStatus::Io,
        Error::Format(_) => DkStatus::Format,
        Error::Param(_) | Error::Bank(_) => DkStatus::Param,
        Error::Shape(_) => DkStatus::Shape,
        Error::Unsupported(_) => DkStatus::Unsupported,
        Error::Lookup(_) => DkStatus::Lookup,
        Error::Undefined(_) => DkStatus::Undefined,
        Error::Backend(_) => DkStatus::Backend,
        Error::Usage(_) | Error::Config(_) => DkStatus::InvalidArgument,
    }
}

fn fail(status: DkStatus, msg: impl Into<String>) -> DkStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), DkStatus>) -> DkStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DkStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(DkStatus::Panic, "panic inside degradekit"),
    }
}

fn lift<T>(r: degradekit::Result<T>) -> Result<T, DkStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn image_ref<'a>(p: *const DkImage) -> Result<&'a ImageBuffer, DkStatus> {
    p.as_ref().map(|i| &i.0).ok_or_else(|| fail(DkStatus::NullPointer, "null image handle"))
}

unsafe fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, DkStatus> {
    p.as_mut().ok_or_else(|| fail(DkStatus::NullPointer, "null output pointer"))
}

fn task_at(index: u32) -> Result<TaskKind, DkStatus> {
    TaskKind::ALL
        .get(index as usize)
        .copied()
        .ok_or_else(|| fail(DkStatus::InvalidArgument, format!("task index {index} out of range")))
}

fn boxed(img: ImageBuffer) -> *mut DkImage {
    Box::into_raw(Box::new(DkImage(img)))
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// call into this library from the same thread.
#[no_mangle]
pub extern "C" fn dk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Number of degradation tasks.
#[no_mangle]
pub extern "C" fn dk_task_count() -> u32 {
    TaskKind::ALL.len() as u32
}

/// Static snake_case name of task `index`, or NULL when out of range.
#[no_mangle]
pub extern "C" fn dk_task_name(index: u32) -> *const c_char {
    const NAMES: [&CStr; 9] = [
        c"blur",
        c"compression",
        c"moire",
        c"low_light",
        c"noise",
        c"flare",
        c"reflection",
        c"haze",
        c"rain",
    ];
    NAMES.get(index as usize).map_or(ptr::null(), |n| n.as_ptr())
}

/// Creates an image from `width * height * channels` interleaved floats.
///
/// # Safety
/// `data` must point to `len` readable floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dk_image_new(
    width: usize,
    height: usize,
    channels: usize,
    data: *const f32,
    len: usize,
    out: *mut *mut DkImage,
) -> DkStatus {
    guard(|| {
        let out = out_ptr(out)?;
        if data.is_null() {
            return Err(fail(DkStatus::NullPointer, "null pixel data"));
        }
        let pixels = std::slice::from_raw_parts(data, len).to_vec();
        *out = boxed(lift(ImageBuffer::from_vec(width, height, channels, pixels))?);
        Ok(())
    })
}

/// Loads a PNG or JPEG file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dk_image_load(path: *const c_char, out: *mut *mut DkImage) -> DkStatus {
    guard(|| {
        let out = out_ptr(out)?;
        if path.is_null() {
            return Err(fail(DkStatus::NullPointer, "null path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(DkStatus::InvalidArgument, "path is not UTF-8"))?;
        *out = boxed(lift(load_image(Path::new(path)))?);
        Ok(())
    })
}

/// Writes an 8-bit PNG.
///
/// # Safety
/// `img` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dk_image_save_png(img: *const DkImage, path: *const c_char) -> DkStatus {
    guard(|| {
        let img = image_ref(img)?;
        if path.is_null() {
            return Err(fail(DkStatus::NullPointer, "null path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(DkStatus::InvalidArgument, "path is not UTF-8"))?;
        let bytes = lift(degradekit::buffer::encode_png(img))?;
        lift(degradekit::buffer::write_atomic(Path::new(path), &bytes))
    })
}

/// Writes width, height and channel count. Any output pointer may be NULL.
///
/// # Safety
/// `img` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn dk_image_shape(
    img: *const DkImage,
    width: *mut usize,
    height: *mut usize,
    channels: *mut usize,
) -> DkStatus {
    guard(|| {
        let img = image_ref(img)?;
        for (p, v) in [(width, img.width()), (height, img.height()), (channels, img.channels())] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies pixels into `buf`, which must hold exactly the image's sample count.
///
/// # Safety
/// `img` must be a live handle and `buf` must point to `len` writable floats.
#[no_mangle]
pub unsafe extern "C" fn dk_image_copy_data(img: *const DkImage, buf: *mut f32, len: usize) -> DkStatus {
    guard(|| {
        let img = image_ref(img)?;
        if buf.is_null() {
            return Err(fail(DkStatus::NullPointer, "null buffer"));
        }
        let data = img.data();
        if len != data.len() {
            return Err(fail(DkStatus::Shape, format!("buffer holds {len} samples, image has {}", data.len())));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, len);
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `img` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dk_image_free(img: *mut DkImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Degrades `img` with task `task` at `severity` in [0, 1]. `depth` may be
/// NULL except for haze; its first channel is read as normalized depth.
/// Parameters and noise are drawn from `seed` exactly as `synth` does for a
/// given seed node.
///
/// # Safety
/// `img` must be a live handle, `depth` NULL or a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dk_degrade(
    img: *const DkImage,
    depth: *const DkImage,
    task: u32,
    severity: f64,
    seed: u64,
    out: *mut *mut DkImage,
) -> DkStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let img = image_ref(img)?;
        let depth = depth.as_ref().map(|d| DepthMap::from_image(&d.0));
        let task = task_at(task)?;
        let severity = lift(Severity::new(severity))?;
        let node = SeedTree::new(seed);
        let params = lift(severity_to_params(task, severity, &SeverityMap::default(), &node.child(1)))?;
        let ctx = DegradeContext {
            depth: depth.as_ref(),
            ..Default::default()
        };
        *out = boxed(lift(degrade(img, &params, &node.child(2), &ctx))?);
        Ok(())
    })
}

/// Pixel-heuristic degradation score on the 1 to 5 scale.
///
/// # Safety
/// `img` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dk_degradation_score(img: *const DkImage, task: u32, out: *mut f64) -> DkStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let img = image_ref(img)?;
        *out = lift(heuristic_degradation_score(img, task_at(task)?))?.value();
        Ok(())
    })
}

/// Multi-scale structural distance in [0, 1].
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dk_distance(a: *const DkImage, b: *const DkImage, out: *mut f64) -> DkStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let (a, b) = (image_ref(a)?, image_ref(b)?);
        if !a.same_shape(b) {
            return Err(fail(DkStatus::Shape, "images differ in shape"));
        }
        *out = ms_ssim_distance(a, b);
        Ok(())
    })
}

/// Final score from a perceptual distance in [0, 1] and a restoration score.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dk_final_score(lps: f64, rs: f64, out: *mut f64) -> DkStatus {
    guard(|| {
        *out_ptr(out)? = lift(final_score(lps, rs))?;
        Ok(())
    })
}

/// Spearman rank correlation of two length-`n` series.
///
/// # Safety
/// `x` and `y` must point to `n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dk_spearman(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> DkStatus {
    guard(|| {
        let out = out_ptr(out)?;
        if x.is_null() || y.is_null() {
            return Err(fail(DkStatus::NullPointer, "null series"));
        }
        let (x, y) = (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n));
        *out = lift(spearman(x, y))?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_names_match_core() {
        assert_eq!(dk_task_count() as usize, TaskKind::ALL.len());
        for (i, t) in TaskKind::ALL.iter().enumerate() {
            let name = unsafe { CStr::from_ptr(dk_task_name(i as u32)) };
            assert_eq!(name.to_str().unwrap(), t.name());
        }
        assert!(dk_task_name(9).is_null());
    }

    #[test]
    fn every_error_maps_to_a_failure_code() {
        let cases = [
            Error::Format(String::new()),
            Error::Param(String::new()),
            Error::Lookup(String::new()),
            Error::Backend(String::new()),
            Error::Usage(String::new()),
        ];
        for e in cases {
            assert_ne!(status_of(&e), DkStatus::Ok);
        }
    }
}
