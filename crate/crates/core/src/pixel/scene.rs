//! Procedural scene synthesis.
//!
//! The scene is defined over an unbounded world plane as a pure function of
//! (seed, x, y): two octaves of bilinear value noise per channel plus
//! rectangular high-contrast blobs placed on a hashed grid. Frame `i` samples
//! the plane at pixel + i * motion, so consecutive frames are exact rigid
//! translations of each other — which is what the optical-flow and MSE
//! detectors assume of an honest camera.

use super::{mosaic, PixelBuffer, PixelError, RgbImage, SceneConfig};

const SALT_NOISE_BASE: u64 = 0x9e37_79b9_0000_0001;
const SALT_BLOB_PRESENCE: u64 = 0xb10b_0000_0000_0001;
const SALT_BLOB_SHAPE: u64 = 0xb10b_0000_0000_0002;
const BLOB_CELL: f64 = 16.0;

#[inline]
fn mix64(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[inline]
fn hash_cell(seed: u64, xi: i64, yi: i64, salt: u64) -> u64 {
    let mut h = seed ^ salt;
    h = mix64(h ^ (xi as u64).wrapping_mul(0x8864_6760_45d8_7f3b));
    h = mix64(h ^ (yi as u64).wrapping_mul(0xd6e8_feb8_6659_fd93));
    h
}

#[inline]
fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(seed: u64, x: f64, y: f64, scale: f64, salt: u64) -> f64 {
    let gx = x / scale;
    let gy = y / scale;
    let x0 = gx.floor();
    let y0 = gy.floor();
    let fx = gx - x0;
    let fy = gy - y0;
    let (xi, yi) = (x0 as i64, y0 as i64);
    let v00 = unit(hash_cell(seed, xi, yi, salt));
    let v10 = unit(hash_cell(seed, xi + 1, yi, salt));
    let v01 = unit(hash_cell(seed, xi, yi + 1, salt));
    let v11 = unit(hash_cell(seed, xi + 1, yi + 1, salt));
    let top = v00 + (v10 - v00) * fx;
    let bot = v01 + (v11 - v01) * fx;
    top + (bot - top) * fy
}

/// Blob palette. Deliberately avoids saturated red so the background cannot
/// masquerade as the sign templates.
const BLOB_COLORS: [[u8; 3]; 6] = [
    [18, 18, 22],
    [235, 235, 230],
    [60, 80, 205],
    [55, 180, 85],
    [225, 205, 60],
    [140, 95, 45],
];

fn blob_color_at(scene: &SceneConfig, wx: f64, wy: f64) -> Option<[u8; 3]> {
    let presence_prob = (scene.corner_density * BLOB_CELL * BLOB_CELL / 1.0e6).min(1.0);
    let cx = (wx / BLOB_CELL).floor() as i64;
    let cy = (wy / BLOB_CELL).floor() as i64;
    let mut hit = None;
    for dy in -1..=1i64 {
        for dx in -1..=1i64 {
            let (gx, gy) = (cx + dx, cy + dy);
            let h = hash_cell(scene.seed, gx, gy, SALT_BLOB_PRESENCE);
            if unit(h) >= presence_prob {
                continue;
            }
            let s = hash_cell(scene.seed, gx, gy, SALT_BLOB_SHAPE);
            let ox = (s & 0xff) as f64 / 255.0;
            let oy = ((s >> 8) & 0xff) as f64 / 255.0;
            let half = 2.0 + 4.0 * ((s >> 16) & 0xff) as f64 / 255.0;
            let color = BLOB_COLORS[((s >> 24) % BLOB_COLORS.len() as u64) as usize];
            let bx = (gx as f64 + ox) * BLOB_CELL;
            let by = (gy as f64 + oy) * BLOB_CELL;
            if (wx - bx).abs() <= half && (wy - by).abs() <= half {
                hit = Some(color);
            }
        }
    }
    hit
}

fn scene_color(scene: &SceneConfig, wx: f64, wy: f64) -> [u8; 3] {
    if let Some(c) = blob_color_at(scene, wx, wy) {
        return c;
    }
    let mut rgb = [0u8; 3];
    for (ch, slot) in rgb.iter_mut().enumerate() {
        let salt = SALT_NOISE_BASE.wrapping_add(ch as u64);
        let coarse = value_noise(scene.seed, wx, wy, scene.texture_scale, salt);
        let fine = value_noise(scene.seed, wx, wy, (scene.texture_scale / 2.0).max(1.0), salt ^ 0x5a5a);
        let v = 30.0 + 195.0 * (0.65 * coarse + 0.35 * fine);
        *slot = v.round().clamp(0.0, 255.0) as u8;
    }
    rgb
}

/// Render the RGB view of frame `frame_index` before mosaicing.
pub fn render_scene_rgb(scene: &SceneConfig, frame_index: u64) -> Result<RgbImage, PixelError> {
    scene.validate()?;
    let off_x = frame_index as f64 * scene.motion.0;
    let off_y = frame_index as f64 * scene.motion.1;
    let mut data = Vec::with_capacity(3 * scene.width as usize * scene.height as usize);
    for r in 0..scene.height {
        for c in 0..scene.width {
            let rgb = scene_color(scene, c as f64 + off_x, r as f64 + off_y);
            data.extend_from_slice(&rgb);
        }
    }
    RgbImage::new(scene.width, scene.height, data)
}

/// The camera's raw output for frame `frame_index`: the rendered scene
/// sampled onto the RGGB grid.
pub fn synth_frame(scene: &SceneConfig, frame_index: u64) -> Result<PixelBuffer, PixelError> {
    let rgb = render_scene_rgb(scene, frame_index)?;
    mosaic(&rgb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> SceneConfig {
        SceneConfig {
            seed: 42,
            width: 64,
            height: 32,
            motion: (2.0, 0.0),
            texture_scale: 8.0,
            corner_density: 2500.0,
        }
    }

    #[test]
    fn same_inputs_same_frame() {
        let a = synth_frame(&scene(), 5).unwrap();
        let b = synth_frame(&scene(), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn static_scene_repeats_exactly() {
        let mut s = scene();
        s.motion = (0.0, 0.0);
        let a = synth_frame(&s, 0).unwrap();
        let b = synth_frame(&s, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn integer_motion_is_exact_translation() {
        let s = scene();
        let a = render_scene_rgb(&s, 3).unwrap();
        let b = render_scene_rgb(&s, 4).unwrap();
        // Frame 4 at column c equals frame 3 at column c + dx.
        for r in 0..s.height {
            for c in 0..s.width - 2 {
                assert_eq!(b.px(r, c), a.px(r, c + 2));
            }
        }
    }

    #[test]
    fn different_seeds_differ() {
        let mut s2 = scene();
        s2.seed = 43;
        assert_ne!(synth_frame(&scene(), 0).unwrap(), synth_frame(&s2, 0).unwrap());
    }

    #[test]
    fn zero_corner_density_rejected() {
        let mut s = scene();
        s.corner_density = 0.0;
        assert!(synth_frame(&s, 0).is_err());
    }

    #[test]
    fn blobs_are_present_at_default_density() {
        // The blob palette's darkest entry should show up somewhere in a
        // 64x32 crop at 2500 features per megapixel.
        let rgb = render_scene_rgb(&scene(), 0).unwrap();
        let mut extremes = 0usize;
        for r in 0..32 {
            for c in 0..64 {
                let p = rgb.px(r, c);
                if p[0] < 25 || p[0] > 230 {
                    extremes += 1;
                }
            }
        }
        assert!(extremes > 20, "expected blob coverage, got {extremes} extreme pixels");
    }
}
