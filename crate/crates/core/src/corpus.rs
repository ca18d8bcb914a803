//! Procedural outdoor scenes with matching depth maps and segmentation
//! masks. Used to calibrate the heuristic scorers and by the test suites.

use rand::Rng as _;

use crate::buffer::ImageBuffer;
use crate::patterns::{gen_haze_texture, DepthMap, SegMask};
use crate::seed::SeedTree;

/// Scenes `0..CALIBRATION_SCENES` at `CALIBRATION_SIZE`² form the corpus the
/// heuristic scorers are calibrated on.
pub const CALIBRATION_SCENES: u64 = 20;
pub const CALIBRATION_SIZE: usize = 128;

pub struct Scene {
    pub image: ImageBuffer,
    pub depth: DepthMap,
    pub mask: SegMask,
}

#[derive(Clone, Copy)]
enum Shape {
    Rect,
    Ellipse,
}

struct Object {
    shape: Shape,
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    color: [f32; 3],
    depth: f32,
    /// Stripe period in pixels, 0 for plain.
    stripes: f64,
}

impl Object {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = ((x - self.cx) / self.rx, (y - self.cy) / self.ry);
        match self.shape {
            Shape::Rect => dx.abs() <= 1.0 && dy.abs() <= 1.0,
            Shape::Ellipse => dx * dx + dy * dy <= 1.0,
        }
    }
}

/// A saturated color: one channel pushed low, one high.
fn saturated(rng: &mut crate::seed::Rng) -> [f32; 3] {
    let mut c = [rng.gen_range(0.3..0.9f32), rng.gen_range(0.3..0.9f32), rng.gen_range(0.3..0.9f32)];
    let lo = rng.gen_range(0..3);
    c[lo] = rng.gen_range(0.0..0.08);
    let hi = (lo + 1 + rng.gen_range(0..2)) % 3;
    c[hi] = rng.gen_range(0.75..1.0);
    c
}

/// Scene `seed` at `width`×`height`: sky, textured ground, and 6 to 12
/// saturated objects with stripes and contact shadows. Depth is 1 in the
/// sky and falls to 0 at the bottom edge; objects take the ground depth at
/// their base. Mask regions: sky, ground, then one per object.
pub fn gen_scene(seed: u64, width: usize, height: usize) -> Scene {
    let tree = SeedTree::new(0x5CE4E).child(seed);
    let mut rng = tree.child(0).rng();
    let (w, h) = (width as f64, height as f64);
    let horizon = rng.gen_range(0.25..0.4) * h;
    let ground_depth = |y: f64| -> f32 {
        if y < horizon {
            1.0
        } else {
            (0.95 * (1.0 - (y - horizon) / (h - horizon))) as f32
        }
    };
    let sky_top = [rng.gen_range(0.2..0.35f32), rng.gen_range(0.45..0.6f32), rng.gen_range(0.85..1.0f32)];
    let ground = saturated(&mut rng).map(|v| v * 0.8);
    let n = rng.gen_range(6..=12);
    let mut objects: Vec<Object> = (0..n)
        .map(|_| {
            let ry = rng.gen_range(0.06..0.2) * h;
            let base = rng.gen_range(horizon + 0.1 * h..h);
            Object {
                shape: if rng.gen::<bool>() { Shape::Rect } else { Shape::Ellipse },
                cx: rng.gen_range(0.0..w),
                cy: base - ry,
                rx: rng.gen_range(0.05..0.18) * w,
                ry,
                color: saturated(&mut rng),
                depth: ground_depth(base),
                stripes: if rng.gen::<f64>() < 0.6 { rng.gen_range(3.0..9.0) } else { 0.0 },
            }
        })
        .collect();
    // paint far to near
    objects.sort_by(|a, b| b.depth.partial_cmp(&a.depth).expect("finite depth"));
    let tex = gen_haze_texture(width, height, 4, &tree.child(1)).expect("valid octaves");
    let mut img = ImageBuffer::new(width, height, 3);
    let mut depth = vec![0f32; width * height];
    let mut region = vec![0u32; width * height];
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            let t = tex.get(x, y, 0);
            let i = y * width + x;
            let (mut rgb, mut d, mut r) = if fy < horizon {
                let k = (fy / horizon) as f32;
                (sky_top.map(|v| (v + 0.15 * k).min(1.0)), 1.0, 0u32)
            } else {
                (ground.map(|v| v * (0.7 + 0.6 * t)), ground_depth(fy), 1u32)
            };
            for (k, o) in objects.iter().enumerate() {
                if o.contains(fx, fy) {
                    let stripe = o.stripes > 0.0 && ((fx + fy * 0.3) / o.stripes).floor() as i64 % 2 == 0;
                    let shade = if stripe { 0.55 } else { 1.0 };
                    rgb = o.color.map(|v| v * shade * (0.85 + 0.3 * t));
                    d = o.depth;
                    r = 2 + k as u32;
                } else if r == 1 {
                    // contact shadow just under the object's base
                    let below = fy - (o.cy + o.ry);
                    if (0.0..0.04 * h).contains(&below) && (fx - o.cx).abs() < o.rx {
                        rgb = rgb.map(|v| v * 0.25);
                    }
                }
            }
            for (c, v) in rgb.iter().enumerate() {
                img.set(x, y, c, *v);
            }
            depth[i] = d;
            region[i] = r;
        }
    }
    Scene {
        image: img.quantize8(),
        depth: DepthMap {
            width,
            height,
            d: depth,
        },
        mask: SegMask::from_raw(width, height, &region).expect("sizes match"),
    }
}
