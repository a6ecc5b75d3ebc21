//! RGGB mosaic and bilinear demosaic.
//!
//! Site layout: red at (even row, even col), blue at (odd, odd), green on the
//! two remaining sites. Borders are handled by parity-preserving mirroring
//! (index -1 maps to 1, index n to n-2) so every neighbor fetch still lands on
//! a site of the channel the formula expects.

use super::{PixelBuffer, PixelError, RgbImage};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Site {
    R,
    G,
    B,
}

#[inline]
fn site_at(row: u32, col: u32) -> Site {
    match (row % 2, col % 2) {
        (0, 0) => Site::R,
        (1, 1) => Site::B,
        _ => Site::G,
    }
}

#[inline]
fn channel_index(site: Site) -> usize {
    match site {
        Site::R => 0,
        Site::G => 1,
        Site::B => 2,
    }
}

/// Sample an RGB image onto the RGGB grid. Dimensions must be even.
pub fn mosaic(img: &RgbImage) -> Result<PixelBuffer, PixelError> {
    if img.width() % 2 != 0 || img.height() % 2 != 0 {
        return Err(PixelError::OddDimension { width: img.width(), height: img.height() });
    }
    let mut bytes = Vec::with_capacity(img.width() as usize * img.height() as usize);
    for r in 0..img.height() {
        for c in 0..img.width() {
            let px = img.px(r, c);
            bytes.push(px[channel_index(site_at(r, c))]);
        }
    }
    PixelBuffer::new(img.width(), img.height(), bytes)
}

/// Sample an RGB patch onto the mosaic grid of a larger frame, as if the patch
/// sat at (origin_row, origin_col) of that frame. The origin fixes which color
/// site each patch pixel lands on, so patches can be embedded at any offset
/// without breaking the surrounding mosaic phase.
pub fn mosaic_region(img: &RgbImage, origin_row: u32, origin_col: u32) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(img.width() as usize * img.height() as usize);
    for r in 0..img.height() {
        for c in 0..img.width() {
            let px = img.px(r, c);
            bytes.push(px[channel_index(site_at(origin_row + r, origin_col + c))]);
        }
    }
    bytes
}

#[inline]
fn mirror(i: i64, n: i64) -> usize {
    // Reflection about 0 and n-1 with stride 2 keeps row/column parity, which
    // is what keeps border interpolation on the right color plane.
    let m = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    m as usize
}

/// Bilinear demosaic. Missing channels at each site are the mean of the
/// nearest same-channel neighbors: 2 for the axis-aligned cases, 4 for the
/// diagonal and plus-shaped cases, with truncating integer division.
pub fn demosaic(buf: &PixelBuffer) -> Result<RgbImage, PixelError> {
    buf.ensure_even()?;
    let w = buf.width() as i64;
    let h = buf.height() as i64;
    let bytes = buf.bytes();
    let at = |r: i64, c: i64| -> u32 { bytes[mirror(r, h) * w as usize + mirror(c, w)] as u32 };

    let mut data = Vec::with_capacity(3 * (w * h) as usize);
    for r in 0..h {
        for c in 0..w {
            let center = at(r, c);
            let horiz = (at(r, c - 1) + at(r, c + 1)) / 2;
            let vert = (at(r - 1, c) + at(r + 1, c)) / 2;
            let plus = (at(r, c - 1) + at(r, c + 1) + at(r - 1, c) + at(r + 1, c)) / 4;
            let diag = (at(r - 1, c - 1) + at(r - 1, c + 1) + at(r + 1, c - 1) + at(r + 1, c + 1)) / 4;
            let (red, green, blue) = match (r % 2, c % 2) {
                (0, 0) => (center, plus, diag),
                (0, 1) => (horiz, center, vert),
                (1, 0) => (vert, center, horiz),
                _ => (diag, plus, center),
            };
            data.push(red as u8);
            data.push(green as u8);
            data.push(blue as u8);
        }
    }
    RgbImage::new(buf.width(), buf.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_field_is_a_fixed_point() {
        let buf = PixelBuffer::filled(8, 6, 77).unwrap();
        let rgb = demosaic(&buf).unwrap();
        assert!(rgb.data().iter().all(|&v| v == 77));
    }

    #[test]
    fn odd_dimensions_rejected() {
        let buf = PixelBuffer::new(5, 4, vec![0; 20]).unwrap();
        assert_eq!(demosaic(&buf), Err(PixelError::OddDimension { width: 5, height: 4 }));
    }

    #[test]
    fn single_red_site_spreads_with_bilinear_weights() {
        // 4x4, all zero except the red site at (0,0) = 255. Interior red
        // values follow directly from the neighbor-average formulas.
        let mut bytes = vec![0u8; 16];
        bytes[0] = 255;
        let buf = PixelBuffer::new(4, 4, bytes).unwrap();
        let rgb = demosaic(&buf).unwrap();
        let red = |r: u32, c: u32| rgb.px(r, c)[0];
        // (1,1) is a blue site: red = mean of 4 diagonal red sites, one hot.
        assert_eq!(red(1, 1), 255 / 4);
        // (0,1) green site on a red row: red = mean of left/right red sites.
        assert_eq!(red(0, 1), 255 / 2);
        // (1,0) green site on a blue row: red = mean of up/down red sites.
        assert_eq!(red(1, 0), 255 / 2);
        // (1,2) is a green site on a blue row: red = mean of (0,2),(2,2) = 0.
        assert_eq!(red(1, 2), 0);
        assert_eq!(red(2, 2), 0);
        // Green and blue channels see zero everywhere (only a red site is hot).
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(rgb.px(r, c)[1], 0);
                assert_eq!(rgb.px(r, c)[2], 0);
            }
        }
    }

    #[test]
    fn mosaic_then_demosaic_recovers_smooth_content_closely() {
        // A smooth gradient survives the mosaic round trip with small error.
        let w = 16u32;
        let h = 12u32;
        let mut data = Vec::new();
        for r in 0..h {
            for c in 0..w {
                let v = (10 + r * 6 + c * 4) as u8;
                data.extend_from_slice(&[v, v.saturating_add(15), v.saturating_add(30)]);
            }
        }
        let img = RgbImage::new(w, h, data).unwrap();
        let rgb = demosaic(&mosaic(&img).unwrap()).unwrap();
        for r in 0..h {
            for c in 0..w {
                // Mirrored borders double the gradient step for channels whose
                // neighbors all fall outside, so the edge ring gets more slack.
                let interior = r > 0 && r + 1 < h && c > 0 && c + 1 < w;
                let tol = if interior { 8 } else { 12 };
                for ch in 0..3 {
                    let a = img.px(r, c)[ch] as i32;
                    let b = rgb.px(r, c)[ch] as i32;
                    assert!((a - b).abs() <= tol, "({r},{c}) ch{ch}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn mosaic_region_matches_whole_frame_mosaic() {
        let img = RgbImage::filled(6, 4, [10, 20, 30]).unwrap();
        // Same pixel data mosaiced at two origins differing in parity picks
        // different channels.
        let a = mosaic_region(&img, 0, 0);
        let b = mosaic_region(&img, 1, 0);
        assert_eq!(a[0], 10); // (0,0) red site
        assert_eq!(b[0], 20); // origin row 1 -> green site
    }
}
