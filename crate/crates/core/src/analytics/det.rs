//! Detection error tradeoff curves over raw detector statistics.

use serde::{Deserialize, Serialize};

/// Which side of the threshold a detector treats as anomalous. Frame-similarity
/// (MSE) flags below its threshold; distance-like statistics flag above.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagDirection {
    Above,
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub threshold: f64,
    pub false_positive_rate: f64,
    pub false_negative_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetCurve {
    pub direction: FlagDirection,
    /// Ordered by ascending threshold.
    pub points: Vec<DetPoint>,
}

impl DetCurve {
    /// Smallest FPR + FNR over the curve; 0 means a perfect threshold exists.
    pub fn best_total_error(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.false_positive_rate + p.false_negative_rate)
            .fold(f64::INFINITY, f64::min)
    }
}

fn flagged_fraction(scores: &[f64], threshold: f64, direction: FlagDirection) -> f64 {
    let hits = scores
        .iter()
        .filter(|&&s| match direction {
            FlagDirection::Above => s > threshold,
            FlagDirection::Below => s < threshold,
        })
        .count();
    hits as f64 / scores.len() as f64
}

/// FPR/FNR at each threshold: FPR is the flagged fraction of normal scores,
/// FNR the unflagged fraction of attack scores.
pub fn det_curve(
    normal: &[f64],
    attack: &[f64],
    thresholds: &[f64],
    direction: FlagDirection,
) -> DetCurve {
    assert!(!normal.is_empty() && !attack.is_empty(), "both score sets must be non-empty");
    let mut ts = thresholds.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let points = ts
        .into_iter()
        .map(|t| DetPoint {
            threshold: t,
            false_positive_rate: flagged_fraction(normal, t, direction),
            false_negative_rate: 1.0 - flagged_fraction(attack, t, direction),
        })
        .collect();
    DetCurve { direction, points }
}

/// Threshold grid resolving every distinct decision boundary of the two
/// samples: midpoints between consecutive distinct scores plus outer
/// sentinels, so the full DET staircase is captured.
pub fn auto_thresholds(normal: &[f64], attack: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = normal.iter().chain(attack).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let mut ts = Vec::with_capacity(all.len() + 1);
    match (all.first(), all.last()) {
        (Some(&lo), Some(&hi)) => {
            ts.push(lo - 1.0);
            for w in all.windows(2) {
                ts.push((w[0] + w[1]) / 2.0);
            }
            ts.push(hi + 1.0);
        }
        _ => {}
    }
    ts
}
