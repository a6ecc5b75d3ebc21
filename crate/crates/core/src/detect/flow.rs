//! Sparse optical flow: Shi-Tomasi corners tracked by pyramidal Lucas-Kanade.

use crate::pixel::RgbImage;

pub const SHI_TOMASI_MAX_CORNERS: usize = 200;
pub const SHI_TOMASI_QUALITY: f32 = 0.01;
pub const SHI_TOMASI_MIN_DISTANCE: f32 = 10.0;
pub const LK_LEVELS: usize = 3;
pub const LK_WINDOW: usize = 21;
pub const LK_MAX_ITERS: usize = 30;
pub const LK_EPS: f32 = 0.01;

/// Single-channel float image, luma of an RGB frame.
#[derive(Clone, Debug)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn from_rgb(img: &RgbImage) -> Self {
        let width = img.width() as usize;
        let height = img.height() as usize;
        let mut data = Vec::with_capacity(width * height);
        for r in 0..img.height() {
            for c in 0..img.width() {
                let [red, green, blue] = img.px(r, c);
                data.push(0.299 * red as f32 + 0.587 * green as f32 + 0.114 * blue as f32);
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Pixel value with clamped (replicated) borders.
    fn at(&self, r: isize, c: isize) -> f32 {
        let r = r.clamp(0, self.height as isize - 1) as usize;
        let c = c.clamp(0, self.width as isize - 1) as usize;
        self.data[r * self.width + c]
    }

    /// Bilinear sample at float coordinates, clamped at the edges.
    fn sample(&self, r: f32, c: f32) -> f32 {
        let r0 = r.floor();
        let c0 = c.floor();
        let fr = r - r0;
        let fc = c - c0;
        let r0 = r0 as isize;
        let c0 = c0 as isize;
        let a = self.at(r0, c0);
        let b = self.at(r0, c0 + 1);
        let d = self.at(r0 + 1, c0);
        let e = self.at(r0 + 1, c0 + 1);
        a * (1.0 - fr) * (1.0 - fc) + b * (1.0 - fr) * fc + d * fr * (1.0 - fc) + e * fr * fc
    }

    /// 2x2 box downsample, truncating odd edges.
    fn downsample(&self) -> Self {
        let width = (self.width / 2).max(1);
        let height = (self.height / 2).max(1);
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                let s = self.at(2 * r as isize, 2 * c as isize)
                    + self.at(2 * r as isize, 2 * c as isize + 1)
                    + self.at(2 * r as isize + 1, 2 * c as isize)
                    + self.at(2 * r as isize + 1, 2 * c as isize + 1);
                data.push(s / 4.0);
            }
        }
        Self { width, height, data }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corner {
    pub row: f32,
    pub col: f32,
    pub score: f32,
}

/// Shi-Tomasi corner detection: minimum eigenvalue of the 3x3-summed
/// structure tensor, thresholded at `quality` times the best response, then
/// greedy non-max suppression with `min_distance` spacing.
pub fn shi_tomasi(
    img: &GrayImage,
    max_corners: usize,
    quality: f32,
    min_distance: f32,
) -> Vec<Corner> {
    let w = img.width;
    let h = img.height;
    if w < 5 || h < 5 {
        return Vec::new();
    }
    let mut gx = vec![0.0f32; w * h];
    let mut gy = vec![0.0f32; w * h];
    for r in 0..h as isize {
        for c in 0..w as isize {
            // Sobel derivatives with replicated borders.
            gx[r as usize * w + c as usize] = (img.at(r - 1, c + 1) + 2.0 * img.at(r, c + 1)
                + img.at(r + 1, c + 1)
                - img.at(r - 1, c - 1)
                - 2.0 * img.at(r, c - 1)
                - img.at(r + 1, c - 1))
                / 8.0;
            gy[r as usize * w + c as usize] = (img.at(r + 1, c - 1) + 2.0 * img.at(r + 1, c)
                + img.at(r + 1, c + 1)
                - img.at(r - 1, c - 1)
                - 2.0 * img.at(r - 1, c)
                - img.at(r - 1, c + 1))
                / 8.0;
        }
    }

    let mut response = vec![0.0f32; w * h];
    let mut best = 0.0f32;
    for r in 2..h - 2 {
        for c in 2..w - 2 {
            let mut sxx = 0.0f32;
            let mut syy = 0.0f32;
            let mut sxy = 0.0f32;
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let i = (r as isize + dr) as usize * w + (c as isize + dc) as usize;
                    sxx += gx[i] * gx[i];
                    syy += gy[i] * gy[i];
                    sxy += gx[i] * gy[i];
                }
            }
            let trace = sxx + syy;
            let det_part = ((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy).sqrt();
            let min_eig = 0.5 * (trace - det_part);
            response[r * w + c] = min_eig;
            best = best.max(min_eig);
        }
    }
    if best <= 0.0 {
        return Vec::new();
    }

    let threshold = quality * best;
    let mut candidates: Vec<Corner> = Vec::new();
    for r in 2..h - 2 {
        for c in 2..w - 2 {
            let v = response[r * w + c];
            if v < threshold {
                continue;
            }
            // Local maximum over the 3x3 neighborhood.
            let mut is_max = true;
            'nb: for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if (dr, dc) == (0, 0) {
                        continue;
                    }
                    let n = response[(r as isize + dr) as usize * w + (c as isize + dc) as usize];
                    if n > v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                candidates.push(Corner { row: r as f32, col: c as f32, score: v });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.row.partial_cmp(&b.row).unwrap())
            .then(a.col.partial_cmp(&b.col).unwrap())
    });

    let mut accepted: Vec<Corner> = Vec::new();
    let min_d2 = min_distance * min_distance;
    for cand in candidates {
        if accepted.len() >= max_corners {
            break;
        }
        let ok = accepted.iter().all(|a| {
            let dr = a.row - cand.row;
            let dc = a.col - cand.col;
            dr * dr + dc * dc >= min_d2
        });
        if ok {
            accepted.push(cand);
        }
    }
    accepted
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackResult {
    pub matched: bool,
    /// Displacement from the corner's position in prev, (rows, cols).
    pub flow: (f32, f32),
    /// Mean absolute intensity difference per window pixel at the solution.
    pub residual: f32,
}

/// Track `corners` from prev into cur with pyramidal Lucas-Kanade.
///
/// Levels without room for the tracking window are skipped, so small frames
/// degrade to fewer pyramid levels instead of garbage estimates.
pub fn track_pyr_lk(prev: &GrayImage, cur: &GrayImage, corners: &[Corner]) -> Vec<TrackResult> {
    let mut prev_pyr = vec![prev.clone()];
    let mut cur_pyr = vec![cur.clone()];
    for _ in 1..LK_LEVELS {
        let p = prev_pyr.last().unwrap().downsample();
        let c = cur_pyr.last().unwrap().downsample();
        if p.width < LK_WINDOW + 2 || p.height < LK_WINDOW + 2 {
            break;
        }
        prev_pyr.push(p);
        cur_pyr.push(c);
    }
    let levels = prev_pyr.len();
    let half = (LK_WINDOW / 2) as isize;

    corners
        .iter()
        .map(|corner| {
            let mut v = (0.0f32, 0.0f32);
            let mut solvable = true;
            for level in (0..levels).rev() {
                let p_img = &prev_pyr[level];
                let c_img = &cur_pyr[level];
                let scale = (1 << level) as f32;
                let pr = corner.row / scale;
                let pc = corner.col / scale;

                // Spatial gradients of prev over the window, fixed per level.
                let mut ix = [[0.0f32; LK_WINDOW]; LK_WINDOW];
                let mut iy = [[0.0f32; LK_WINDOW]; LK_WINDOW];
                let mut gxx = 0.0f32;
                let mut gyy = 0.0f32;
                let mut gxy = 0.0f32;
                for wr in -half..=half {
                    for wc in -half..=half {
                        let r = pr + wr as f32;
                        let c = pc + wc as f32;
                        let dx = (p_img.sample(r, c + 1.0) - p_img.sample(r, c - 1.0)) / 2.0;
                        let dy = (p_img.sample(r + 1.0, c) - p_img.sample(r - 1.0, c)) / 2.0;
                        ix[(wr + half) as usize][(wc + half) as usize] = dx;
                        iy[(wr + half) as usize][(wc + half) as usize] = dy;
                        gxx += dx * dx;
                        gyy += dy * dy;
                        gxy += dx * dy;
                    }
                }
                let det = gxx * gyy - gxy * gxy;
                if det.abs() < 1e-7 {
                    solvable = false;
                    break;
                }

                for _ in 0..LK_MAX_ITERS {
                    let mut bx = 0.0f32;
                    let mut by = 0.0f32;
                    for wr in -half..=half {
                        for wc in -half..=half {
                            let r = pr + wr as f32;
                            let c = pc + wc as f32;
                            let di = p_img.sample(r, c) - c_img.sample(r + v.0, c + v.1);
                            bx += di * ix[(wr + half) as usize][(wc + half) as usize];
                            by += di * iy[(wr + half) as usize][(wc + half) as usize];
                        }
                    }
                    // Solve G * eta = b for the 2x2 structure tensor G.
                    let eta_c = (gxx * bx - gxy * by) / det;
                    let eta_r = (gyy * by - gxy * bx) / det;
                    v.0 += eta_r;
                    v.1 += eta_c;
                    if (eta_r * eta_r + eta_c * eta_c).sqrt() < LK_EPS {
                        break;
                    }
                }
                if level > 0 {
                    v = (v.0 * 2.0, v.1 * 2.0);
                }
            }

            let to_r = corner.row + v.0;
            let to_c = corner.col + v.1;
            let in_bounds = solvable
                && to_r >= 0.0
                && to_c >= 0.0
                && to_r <= (cur.height - 1) as f32
                && to_c <= (cur.width - 1) as f32;
            if !in_bounds {
                return TrackResult { matched: false, flow: v, residual: f32::INFINITY };
            }
            let mut err = 0.0f32;
            for wr in -half..=half {
                for wc in -half..=half {
                    let r = corner.row + wr as f32;
                    let c = corner.col + wc as f32;
                    err += (prev.sample(r, c) - cur.sample(r + v.0, c + v.1)).abs();
                }
            }
            let residual = err / (LK_WINDOW * LK_WINDOW) as f32;
            TrackResult { matched: true, flow: v, residual }
        })
        .collect()
}

/// Median of a float slice; empty input gives None.
pub fn median(values: &mut [f32]) -> Option<f32> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}
