//! Passive per-frame anomaly detectors.
//!
//! Seven independent checks run on every received frame against the frame
//! before it: three metadata checks (constant fields, frame id continuity,
//! timestamp spacing), a timestamp-versus-arrival-clock rate check, and three
//! image checks (MSE, hue-saturation histogram distance, sparse optical
//! flow). The receiver alarms on the OR of all seven.

mod flow;
mod histogram;
mod hsv;

pub use flow::{
    median, shi_tomasi, track_pyr_lk, Corner, GrayImage, TrackResult, LK_EPS, LK_LEVELS,
    LK_MAX_ITERS, LK_WINDOW, SHI_TOMASI_MAX_CORNERS, SHI_TOMASI_MIN_DISTANCE, SHI_TOMASI_QUALITY,
};
pub use histogram::{bhattacharyya, Histogram2D};
pub use hsv::rgb_to_hsv;

use crate::pixel::{demosaic, PixelBuffer, RgbImage};
use crate::protocol::LeaderPacket;
use serde::{Deserialize, Serialize};

/// Below this many corners on the previous frame the flow check abstains
/// rather than guess on texture-poor input.
pub const MIN_FLOW_CORNERS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Expected frame width; None when something else (the width-hopping
    /// defense) legitimately varies it, disabling the width comparison.
    pub expected_width: Option<u32>,
    pub expected_height: u32,
    pub expected_format: u32,
    /// Accepted id jump: ids in (prev, prev + id_window] pass.
    pub id_window: u64,
    /// Nominal inter-frame time.
    pub period_ns: u64,
    /// Slack for both timestamp checks.
    pub ts_tolerance_ns: u64,
    /// MSE *below* this value means the scene froze.
    pub mse_threshold: f64,
    /// Bhattacharyya distance above this value means the scene jumped.
    pub hist_threshold: f64,
    /// Median per-pixel tracking residual above this value alerts.
    pub flow_error_threshold: f64,
    /// Alert when fewer than this fraction of corners track.
    pub flow_min_match_fraction: f64,
    pub hue_bins: usize,
    pub sat_bins: usize,
}

impl DetectorConfig {
    pub fn new(expected_width: Option<u32>, expected_height: u32, period_ns: u64) -> Self {
        Self {
            expected_width,
            expected_height,
            expected_format: crate::pixel::PixelFormat::BayerRg8.wire_code(),
            id_window: 4,
            period_ns,
            // Tolerance: a fifth of the frame period.
            ts_tolerance_ns: period_ns / 5,
            mse_threshold: 100.0,
            hist_threshold: 0.4,
            flow_error_threshold: 20.0,
            flow_min_match_fraction: 0.5,
            hue_bins: 50,
            sat_bins: 60,
        }
    }
}

/// Per-frame verdict: one flag per detector plus their OR.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorVerdict {
    pub frame_index: u64,
    pub block_id: u64,
    pub constant_meta: bool,
    pub frame_id: bool,
    pub timestamp: bool,
    pub timestamp_rate: bool,
    pub mse: bool,
    pub histogram: bool,
    pub optical_flow: bool,
    pub combined: bool,
}

impl DetectorVerdict {
    fn quiet(frame_index: u64, block_id: u64) -> Self {
        Self {
            frame_index,
            block_id,
            constant_meta: false,
            frame_id: false,
            timestamp: false,
            timestamp_rate: false,
            mse: false,
            histogram: false,
            optical_flow: false,
            combined: false,
        }
    }

    pub fn any_flags(&self) -> [bool; 7] {
        [
            self.constant_meta,
            self.frame_id,
            self.timestamp,
            self.timestamp_rate,
            self.mse,
            self.histogram,
            self.optical_flow,
        ]
    }
}

/// One received frame as the detector bank sees it.
#[derive(Clone, Debug)]
pub struct FrameObservation {
    pub leader: LeaderPacket,
    pub buffer: PixelBuffer,
    /// Receiver-side clock at reassembly completion.
    pub arrival_ns: u64,
}

pub fn constant_meta_check(leader: &LeaderPacket, cfg: &DetectorConfig) -> bool {
    let width_bad = cfg.expected_width.is_some_and(|w| leader.width != w);
    width_bad || leader.height != cfg.expected_height || leader.pixel_format != cfg.expected_format
}

pub fn frame_id_check(leader: &LeaderPacket, prev: &LeaderPacket, cfg: &DetectorConfig) -> bool {
    leader.block_id <= prev.block_id || leader.block_id > prev.block_id + cfg.id_window
}

pub fn timestamp_check(leader: &LeaderPacket, prev: &LeaderPacket, cfg: &DetectorConfig) -> bool {
    let dt = leader.timestamp_ns as i128 - prev.timestamp_ns as i128;
    let gap = leader.block_id as i128 - prev.block_id as i128;
    let expected = gap * cfg.period_ns as i128;
    (dt - expected).abs() > cfg.ts_tolerance_ns as i128
}

pub fn timestamp_rate_check(
    leader: &LeaderPacket,
    prev: &LeaderPacket,
    arrival_delta_ns: u64,
    cfg: &DetectorConfig,
) -> bool {
    let dt = leader.timestamp_ns as i128 - prev.timestamp_ns as i128;
    (dt - arrival_delta_ns as i128).abs() > cfg.ts_tolerance_ns as i128
}

/// Mean squared difference of raw sensor bytes over the overlapping region.
pub fn mse_raw(a: &PixelBuffer, b: &PixelBuffer) -> f64 {
    let w = a.width().min(b.width());
    let h = a.height().min(b.height());
    let mut sum = 0u64;
    for r in 0..h {
        for c in 0..w {
            let d = a.byte(r, c) as i64 - b.byte(r, c) as i64;
            sum += (d * d) as u64;
        }
    }
    sum as f64 / (w as u64 * h as u64) as f64
}

/// A frozen image loop betrays itself by being too similar: alert when the
/// MSE falls *below* the threshold.
pub fn mse_check(cur: &PixelBuffer, prev: &PixelBuffer, cfg: &DetectorConfig) -> bool {
    mse_raw(cur, prev) < cfg.mse_threshold
}

pub fn histogram_distance(cur: &RgbImage, prev: &RgbImage, cfg: &DetectorConfig) -> f64 {
    let hc = Histogram2D::from_rgb(cur, cfg.hue_bins, cfg.sat_bins);
    let hp = Histogram2D::from_rgb(prev, cfg.hue_bins, cfg.sat_bins);
    bhattacharyya(&hp, &hc)
}

pub fn histogram_check(cur: &RgbImage, prev: &RgbImage, cfg: &DetectorConfig) -> bool {
    histogram_distance(cur, prev, cfg) > cfg.hist_threshold
}

/// Diagnostics the flow check carries alongside its boolean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowAssessment {
    pub corner_count: usize,
    pub matched: usize,
    pub median_residual: Option<f64>,
    /// Previous frame too texture-poor to judge; alert forced false.
    pub abstained: bool,
    pub alert: bool,
}

/// Track corners found on prev into cur; alert when tracking falls apart
/// (few matches) or survives only with large residuals (content replaced).
pub fn optical_flow_check(prev: &RgbImage, cur: &RgbImage, cfg: &DetectorConfig) -> FlowAssessment {
    let prev_gray = GrayImage::from_rgb(prev);
    let cur_gray = GrayImage::from_rgb(cur);
    let corners = shi_tomasi(
        &prev_gray,
        SHI_TOMASI_MAX_CORNERS,
        SHI_TOMASI_QUALITY,
        SHI_TOMASI_MIN_DISTANCE,
    );
    if corners.len() < MIN_FLOW_CORNERS {
        return FlowAssessment {
            corner_count: corners.len(),
            matched: 0,
            median_residual: None,
            abstained: true,
            alert: false,
        };
    }
    let tracks = track_pyr_lk(&prev_gray, &cur_gray, &corners);
    let mut residuals: Vec<f32> =
        tracks.iter().filter(|t| t.matched).map(|t| t.residual).collect();
    let matched = residuals.len();
    let fraction = matched as f64 / corners.len() as f64;
    let median_residual = median(&mut residuals).map(f64::from);
    let alert = fraction < cfg.flow_min_match_fraction
        || median_residual.is_some_and(|m| m > cfg.flow_error_threshold);
    FlowAssessment { corner_count: corners.len(), matched, median_residual, abstained: false, alert }
}

struct PrevFrame {
    leader: LeaderPacket,
    arrival_ns: u64,
    raw: PixelBuffer,
    rgb: Option<RgbImage>,
}

/// Incremental detector bank: feed frames in arrival order, get one verdict
/// each. The first frame has no reference and yields all-false.
pub struct DetectorRunner {
    cfg: DetectorConfig,
    frame_index: u64,
    prev: Option<PrevFrame>,
}

impl DetectorRunner {
    pub fn new(cfg: DetectorConfig) -> Self {
        Self { cfg, frame_index: 0, prev: None }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn push(&mut self, obs: &FrameObservation) -> DetectorVerdict {
        let index = self.frame_index;
        self.frame_index += 1;
        // Odd geometry cannot come off the wire; demosaic only fails for
        // hand-built buffers, and then the image checks abstain.
        let rgb = demosaic(&obs.buffer).ok();

        let verdict = match &self.prev {
            None => DetectorVerdict::quiet(index, obs.leader.block_id),
            Some(prev) => {
                let constant_meta = constant_meta_check(&obs.leader, &self.cfg);
                let frame_id = frame_id_check(&obs.leader, &prev.leader, &self.cfg);
                let timestamp = timestamp_check(&obs.leader, &prev.leader, &self.cfg);
                let timestamp_rate = timestamp_rate_check(
                    &obs.leader,
                    &prev.leader,
                    obs.arrival_ns.saturating_sub(prev.arrival_ns),
                    &self.cfg,
                );
                let mse = mse_check(&obs.buffer, &prev.raw, &self.cfg);
                let (histogram, optical_flow) = match (&rgb, &prev.rgb) {
                    (Some(cur), Some(before)) => (
                        histogram_check(cur, before, &self.cfg),
                        optical_flow_check(before, cur, &self.cfg).alert,
                    ),
                    _ => (false, false),
                };
                let combined = constant_meta
                    || frame_id
                    || timestamp
                    || timestamp_rate
                    || mse
                    || histogram
                    || optical_flow;
                DetectorVerdict {
                    frame_index: index,
                    block_id: obs.leader.block_id,
                    constant_meta,
                    frame_id,
                    timestamp,
                    timestamp_rate,
                    mse,
                    histogram,
                    optical_flow,
                    combined,
                }
            }
        };
        self.prev = Some(PrevFrame {
            leader: obs.leader,
            arrival_ns: obs.arrival_ns,
            raw: obs.buffer.clone(),
            rgb,
        });
        verdict
    }
}

/// Batch evaluation over an ordered frame stream.
pub fn run_detectors(observations: &[FrameObservation], cfg: &DetectorConfig) -> Vec<DetectorVerdict> {
    let mut runner = DetectorRunner::new(cfg.clone());
    observations.iter().map(|o| runner.push(o)).collect()
}
