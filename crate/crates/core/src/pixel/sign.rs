//! Sign templates and the toy recognizer.
//!
//! The recognizer stands in for the vehicle's perception stack: it slides the
//! template over the image and reports the best normalized cross-correlation.
//! A geometrically intact injected sign scores near 1; one sheared by a width
//! mismatch decorrelates and drops below the detection threshold.

use super::{PixelError, RgbImage, SignLabel, SignTemplate};

/// Scores at or above this count as "the sign was recognized".
pub const SIGN_SCORE_THRESHOLD: f64 = 0.3;

/// Default search stride, in pixels, for both axes.
pub const TOY_DETECT_STRIDE: u32 = 2;

/// Deterministically raster a sign template at the requested even size.
pub fn make_template(label: SignLabel, width: u32, height: u32) -> Result<SignTemplate, PixelError> {
    if width == 0 || height == 0 {
        return Err(PixelError::ZeroDimension { width, height });
    }
    if width % 2 != 0 || height % 2 != 0 {
        return Err(PixelError::OddDimension { width, height });
    }
    let image = match label {
        SignLabel::StopSign => raster_stop_sign(width, height),
        SignLabel::RedLight => raster_red_light(width, height),
    };
    Ok(SignTemplate { label, image })
}

fn raster_stop_sign(w: u32, h: u32) -> RgbImage {
    let mut img = RgbImage::filled(w, h, [238, 238, 234]).unwrap();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    // Regular octagon with inradius a: |dx| <= a, |dy| <= a, |dx|+|dy| <= a*sqrt(2).
    let a = 0.46 * w.min(h) as f64;
    let rim = (0.08 * w.min(h) as f64).max(1.5);
    let band = 0.12 * h as f64;
    for r in 0..h {
        for c in 0..w {
            let dx = (c as f64 - cx).abs();
            let dy = (r as f64 - cy).abs();
            if dx > a || dy > a || dx + dy > a * std::f64::consts::SQRT_2 {
                continue;
            }
            // Perpendicular distance to the nearest octagon edge.
            let edge = (a - dx)
                .min(a - dy)
                .min((a * std::f64::consts::SQRT_2 - (dx + dy)) / std::f64::consts::SQRT_2);
            // White rim around a face of 2px vertical stripes. The stripe
            // period (4px) puts detail at the highest frequency that survives
            // demosaicing, so any horizontal misregistration of 2px or more
            // decorrelates the face instead of leaving a red mass that still
            // matches. Injected content is Bayer-aligned, hence even offsets.
            let color = if edge <= rim {
                [245, 245, 245]
            } else if (c / 2) % 2 == 0 {
                if dy <= band { [70, 20, 22] } else { [196, 24, 30] }
            } else {
                [250, 247, 244]
            };
            img.set_px(r, c, color);
        }
    }
    img
}

fn raster_red_light(w: u32, h: u32) -> RgbImage {
    let mut img = RgbImage::filled(w, h, [180, 180, 178]).unwrap();
    // Dark housing occupying the middle half of the width.
    let hx0 = w as f64 * 0.28;
    let hx1 = w as f64 * 0.72;
    let cx = (w as f64 - 1.0) / 2.0;
    let lamp_r = 0.16 * h.min(w) as f64;
    let lamps = [(0.22, [235, 40, 40]), (0.5, [55, 48, 44]), (0.78, [55, 48, 44])];
    for r in 0..h {
        for c in 0..w {
            let x = c as f64;
            let y = r as f64;
            if x >= hx0 && x <= hx1 && y >= h as f64 * 0.04 && y <= h as f64 * 0.96 {
                let mut color = [38, 38, 42];
                for (fy, lamp) in lamps {
                    let ly = h as f64 * fy;
                    if (x - cx).powi(2) + (y - ly).powi(2) <= lamp_r * lamp_r {
                        color = lamp;
                    }
                }
                img.set_px(r, c, color);
            }
        }
    }
    img
}

/// Paste the template onto a flat mid-gray backdrop of the given size.
pub fn render_on_background(
    template: &SignTemplate,
    width: u32,
    height: u32,
    row: u32,
    col: u32,
) -> Result<RgbImage, PixelError> {
    let mut img = RgbImage::filled(width, height, [122, 122, 124])?;
    img.blit(&template.image, row, col)?;
    Ok(img)
}

/// Best normalized cross-correlation of the template over all placements at
/// the given stride, treating the three channels as one long vector. Windows
/// (or templates) with zero variance score 0 by convention. Result is in
/// [-1, 1].
pub fn toy_sign_detect(img: &RgbImage, template: &SignTemplate, stride: u32) -> Result<f64, PixelError> {
    let tpl = &template.image;
    let (tw, th) = (tpl.width(), tpl.height());
    let (iw, ih) = (img.width(), img.height());
    if tw > iw || th > ih {
        return Err(PixelError::TemplateTooLarge {
            tpl_width: tw,
            tpl_height: th,
            img_width: iw,
            img_height: ih,
        });
    }
    let stride = stride.max(1);
    let n = (3 * tw * th) as f64;

    let tdata = tpl.data();
    let mut t_sum = 0i64;
    let mut t_sq = 0i64;
    for &v in tdata {
        t_sum += v as i64;
        t_sq += (v as i64) * (v as i64);
    }
    let t_mean = t_sum as f64 / n;
    let t_var = t_sq as f64 - n * t_mean * t_mean;
    if t_var <= 0.0 {
        return Ok(0.0);
    }

    let idata = img.data();
    let irow = 3 * iw as usize;
    let trow = 3 * tw as usize;
    let mut best = -1.0f64;
    let mut r0 = 0u32;
    while r0 + th <= ih {
        let mut c0 = 0u32;
        while c0 + tw <= iw {
            let mut i_sum = 0i64;
            let mut i_sq = 0i64;
            let mut cross = 0i64;
            for tr in 0..th as usize {
                let ibase = (r0 as usize + tr) * irow + 3 * c0 as usize;
                let tbase = tr * trow;
                let iw_slice = &idata[ibase..ibase + trow];
                let tw_slice = &tdata[tbase..tbase + trow];
                for (&iv, &tv) in iw_slice.iter().zip(tw_slice) {
                    let iv = iv as i64;
                    i_sum += iv;
                    i_sq += iv * iv;
                    cross += iv * tv as i64;
                }
            }
            let i_mean = i_sum as f64 / n;
            let i_var = i_sq as f64 - n * i_mean * i_mean;
            if i_var > 0.0 {
                let cov = cross as f64 - n * i_mean * t_mean;
                let r = cov / (i_var * t_var).sqrt();
                if r > best {
                    best = r;
                }
            } else if best < 0.0 {
                best = 0.0;
            }
            c0 += stride;
        }
        r0 += stride;
    }
    Ok(best.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_copy_scores_one() {
        let tpl = make_template(SignLabel::StopSign, 24, 24).unwrap();
        let img = render_on_background(&tpl, 64, 48, 8, 12).unwrap();
        let score = toy_sign_detect(&img, &tpl, 1).unwrap();
        assert!(score > 0.9999, "score {score}");
    }

    #[test]
    fn stride_two_grid_covers_bayer_aligned_placements() {
        // Injected content keeps even offsets so its Bayer phase is intact;
        // the stride-2 grid therefore lands exactly on any placement it can
        // meet in practice, wherever the sign sits.
        let tpl = make_template(SignLabel::StopSign, 24, 24).unwrap();
        for (row, col) in [(0, 0), (6, 10), (22, 38)] {
            let img = render_on_background(&tpl, 64, 48, row, col).unwrap();
            let score = toy_sign_detect(&img, &tpl, TOY_DETECT_STRIDE).unwrap();
            assert!(score > 0.9999, "score {score} at ({row}, {col})");
        }
    }

    #[test]
    fn flat_image_scores_zero() {
        let tpl = make_template(SignLabel::RedLight, 16, 24).unwrap();
        let img = RgbImage::filled(40, 40, [90, 90, 90]).unwrap();
        assert_eq!(toy_sign_detect(&img, &tpl, 1).unwrap(), 0.0);
    }

    #[test]
    fn brightness_offset_does_not_change_score() {
        let tpl = make_template(SignLabel::StopSign, 24, 24).unwrap();
        let base = render_on_background(&tpl, 48, 48, 8, 8).unwrap();
        let shifted_data: Vec<u8> = base.data().iter().map(|&v| v.saturating_sub(20)).collect();
        // saturating_sub clips at 0; the template render keeps everything
        // >= 20 except nothing, so verify on the raw data first.
        assert!(base.data().iter().all(|&v| v >= 20));
        let shifted = RgbImage::new(48, 48, shifted_data).unwrap();
        let a = toy_sign_detect(&base, &tpl, 2).unwrap();
        let b = toy_sign_detect(&shifted, &tpl, 2).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn template_larger_than_image_is_an_error() {
        let tpl = make_template(SignLabel::StopSign, 24, 24).unwrap();
        let img = RgbImage::filled(16, 16, [0, 0, 0]).unwrap();
        assert!(matches!(
            toy_sign_detect(&img, &tpl, 1),
            Err(PixelError::TemplateTooLarge { .. })
        ));
    }

    #[test]
    fn the_two_labels_render_differently() {
        let a = make_template(SignLabel::StopSign, 24, 24).unwrap();
        let b = make_template(SignLabel::RedLight, 24, 24).unwrap();
        assert_ne!(a.image, b.image);
    }
}
