use std::ffi::{CStr, CString};
use std::ptr;

use degradekit_ffi::*;

fn gradient(w: usize, h: usize) -> Vec<f32> {
    (0..w * h * 3).map(|i| ((i / 3) % w) as f32 / w as f32).collect()
}

fn new_image(w: usize, h: usize, data: &[f32]) -> *mut DkImage {
    let mut img = ptr::null_mut();
    let s = unsafe { dk_image_new(w, h, 3, data.as_ptr(), data.len(), &mut img) };
    assert_eq!(s, DkStatus::Ok);
    img
}

fn last_error() -> String {
    let p = dk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn image_round_trip_and_shape() {
    let data = gradient(32, 24);
    let img = new_image(32, 24, &data);
    let (mut w, mut h, mut c) = (0, 0, 0);
    assert_eq!(unsafe { dk_image_shape(img, &mut w, &mut h, &mut c) }, DkStatus::Ok);
    assert_eq!((w, h, c), (32, 24, 3));
    let mut back = vec![0.0f32; data.len()];
    assert_eq!(unsafe { dk_image_copy_data(img, back.as_mut_ptr(), back.len()) }, DkStatus::Ok);
    assert_eq!(back, data);
    assert_eq!(unsafe { dk_image_copy_data(img, back.as_mut_ptr(), 5) }, DkStatus::Shape);
    unsafe { dk_image_free(img) };
}

#[test]
fn save_then_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("a.png").to_str().unwrap()).unwrap();
    let img = new_image(16, 16, &gradient(16, 16));
    assert_eq!(unsafe { dk_image_save_png(img, path.as_ptr()) }, DkStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { dk_image_load(path.as_ptr(), &mut loaded) }, DkStatus::Ok);
    let mut d = -1.0;
    assert_eq!(unsafe { dk_distance(img, loaded, &mut d) }, DkStatus::Ok);
    assert!(d < 0.01, "{d}");
    unsafe {
        dk_image_free(img);
        dk_image_free(loaded);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut img = ptr::null_mut();
    let missing = CString::new("/nonexistent/x.png").unwrap();
    assert_eq!(unsafe { dk_image_load(missing.as_ptr(), &mut img) }, DkStatus::Io);
    assert!(img.is_null());
    assert!(last_error().contains("x.png"));

    let data = [0.5f32; 10];
    assert_eq!(unsafe { dk_image_new(4, 4, 3, data.as_ptr(), 10, &mut img) }, DkStatus::Shape);
    assert_eq!(unsafe { dk_image_new(4, 4, 3, ptr::null(), 48, &mut img) }, DkStatus::NullPointer);

    let mut v = 0.0;
    assert_eq!(unsafe { dk_final_score(1.5, 1.0, &mut v) }, DkStatus::Param);
    assert_eq!(unsafe { dk_final_score(0.5, 1.0, ptr::null_mut()) }, DkStatus::NullPointer);
    assert_eq!(unsafe { dk_final_score(0.5, 1.0, &mut v) }, DkStatus::Ok);
    assert!(dk_last_error().is_null());
    assert!((v - 0.1).abs() < 1e-12);
}

#[test]
fn degrade_is_seeded() {
    let src = new_image(48, 48, &gradient(48, 48));
    let noise = (0..dk_task_count())
        .find(|&i| unsafe { CStr::from_ptr(dk_task_name(i)) }.to_str() == Ok("noise"))
        .unwrap();
    let run = |seed| {
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { dk_degrade(src, ptr::null(), noise, 0.8, seed, &mut out) }, DkStatus::Ok);
        let mut buf = vec![0.0f32; 48 * 48 * 3];
        assert_eq!(unsafe { dk_image_copy_data(out, buf.as_mut_ptr(), buf.len()) }, DkStatus::Ok);
        unsafe { dk_image_free(out) };
        buf
    };
    assert_eq!(run(7), run(7));
    assert_ne!(run(7), run(8));

    let mut score = 0.0;
    assert_eq!(unsafe { dk_degradation_score(src, noise, &mut score) }, DkStatus::Ok);
    assert!((1.0..=5.0).contains(&score));
    unsafe { dk_image_free(src) };
}

#[test]
fn haze_needs_depth() {
    let src = new_image(32, 32, &gradient(32, 32));
    let haze = (0..dk_task_count())
        .find(|&i| unsafe { CStr::from_ptr(dk_task_name(i)) }.to_str() == Ok("haze"))
        .unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { dk_degrade(src, ptr::null(), haze, 0.5, 1, &mut out) }, DkStatus::Lookup);
    let depth = new_image(32, 32, &[0.5f32; 32 * 32 * 3]);
    assert_eq!(unsafe { dk_degrade(src, depth, haze, 0.5, 1, &mut out) }, DkStatus::Ok);
    assert_eq!(unsafe { dk_degrade(src, depth, 99, 0.5, 1, &mut out) }, DkStatus::InvalidArgument);
    assert_eq!(unsafe { dk_degrade(src, depth, haze, 1.5, 1, &mut out) }, DkStatus::Param);
    unsafe {
        dk_image_free(out);
        dk_image_free(depth);
        dk_image_free(src);
    }
}

#[test]
fn spearman_through_abi() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [10.0, 9.0, 2.0, 1.0];
    let mut r = 0.0;
    assert_eq!(unsafe { dk_spearman(x.as_ptr(), y.as_ptr(), 4, &mut r) }, DkStatus::Ok);
    assert!((r + 1.0).abs() < 1e-12);
    let flat = [1.0; 4];
    assert_ne!(unsafe { dk_spearman(x.as_ptr(), flat.as_ptr(), 4, &mut r) }, DkStatus::Ok);
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/degradekit.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in ["dk_degrade", "dk_image_free", "dk_last_error", "typedef struct DkImage DkImage"] {
        assert!(text.contains(sym), "{sym}");
    }
    let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() else {
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
