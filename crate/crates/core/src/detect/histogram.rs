//! Hue-saturation histograms and the Bhattacharyya distance between them.

use super::hsv::rgb_to_hsv;
use crate::pixel::RgbImage;

/// 2D histogram over (hue, saturation), raw counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram2D {
    hue_bins: usize,
    sat_bins: usize,
    counts: Vec<u64>,
}

impl Histogram2D {
    pub fn from_rgb(img: &RgbImage, hue_bins: usize, sat_bins: usize) -> Self {
        assert!(hue_bins > 0 && sat_bins > 0);
        let mut counts = vec![0u64; hue_bins * sat_bins];
        for r in 0..img.height() {
            for c in 0..img.width() {
                let [red, green, blue] = img.px(r, c);
                let (h, s, _) = rgb_to_hsv(red, green, blue);
                let hb = ((h / 360.0 * hue_bins as f64) as usize).min(hue_bins - 1);
                let sb = ((s * sat_bins as f64) as usize).min(sat_bins - 1);
                counts[hb * sat_bins + sb] += 1;
            }
        }
        Self { hue_bins, sat_bins, counts }
    }

    pub fn from_counts(hue_bins: usize, sat_bins: usize, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), hue_bins * sat_bins);
        Self { hue_bins, sat_bins, counts }
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Bhattacharyya distance between two histograms of identical shape:
///
///   d = sqrt(1 - sum_k sqrt(H1[k] H2[k]) / sqrt(mean(H1) mean(H2) N^2))
///
/// where N is the bin count, so the denominator collapses to
/// sqrt(total1 * total2). Zero iff the histograms are proportional; 1 when
/// their supports are disjoint.
pub fn bhattacharyya(h1: &Histogram2D, h2: &Histogram2D) -> f64 {
    assert_eq!(
        (h1.hue_bins, h1.sat_bins),
        (h2.hue_bins, h2.sat_bins),
        "histogram shapes must match"
    );
    let t1 = h1.total();
    let t2 = h2.total();
    if t1 == 0 || t2 == 0 {
        return if t1 == t2 { 0.0 } else { 1.0 };
    }
    let cross: f64 = h1
        .counts
        .iter()
        .zip(&h2.counts)
        .map(|(&a, &b)| ((a as f64) * (b as f64)).sqrt())
        .sum();
    let norm = ((t1 as f64) * (t2 as f64)).sqrt();
    (1.0 - cross / norm).clamp(0.0, 1.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hist(counts: &[u64]) -> Histogram2D {
        Histogram2D::from_counts(counts.len(), 1, counts.to_vec())
    }

    #[test]
    fn hand_built_two_bin_distance() {
        // sum sqrt(3*1) + sqrt(1*3) = 2 sqrt 3; totals 4 and 4.
        let d = bhattacharyya(&hist(&[3, 1]), &hist(&[1, 3]));
        assert_abs_diff_eq!(d, (1.0 - 3.0_f64.sqrt() / 2.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(d, 0.3660254037844387, epsilon = 1e-12);
    }

    #[test]
    fn identical_and_proportional_are_zero() {
        assert_eq!(bhattacharyya(&hist(&[4, 2, 9]), &hist(&[4, 2, 9])), 0.0);
        assert_abs_diff_eq!(bhattacharyya(&hist(&[2, 4]), &hist(&[1, 2])), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn disjoint_support_is_one() {
        assert_abs_diff_eq!(bhattacharyya(&hist(&[5, 0]), &hist(&[0, 7])), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn symmetric() {
        let a = hist(&[1, 5, 2, 0]);
        let b = hist(&[3, 1, 0, 4]);
        assert_eq!(bhattacharyya(&a, &b), bhattacharyya(&b, &a));
    }

    #[test]
    fn image_histogram_counts_every_pixel() {
        let mut img = RgbImage::filled(8, 4, [255, 0, 0]).unwrap();
        img.set_px(0, 0, [0, 255, 0]);
        let h = Histogram2D::from_rgb(&img, 50, 60);
        assert_eq!(h.total(), 32);
        assert_eq!(h.bin_count(), 3000);
    }
}
