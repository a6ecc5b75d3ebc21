//! Monte Carlo measurement of the width defense against full-frame
//! injection, driven through complete end-to-end sessions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::attack::{AttackKind, AttackPlan, InjectionPayload, MetadataPolicy, TimestampPolicy};
use crate::defense::{DefensePlan, Verdict};
use crate::pixel::{SceneConfig, SignLabel};
use crate::sim::{run_session, Link, SimConfig};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McAttackConfig {
    pub bits_per_frame: u8,
    /// Verifier window depth; also the simulated camera's apply delay (0 or 1).
    pub d_max: usize,
    /// Total fabricated frames to push through, across all sessions.
    pub attack_frames: u64,
    /// Fabricated frames per session; sessions use disjoint derived seeds.
    pub frames_per_session: u64,
    /// Width the attacker fixes for every fake. None means the camera's
    /// maximum, the best static guess. An off-alphabet width never verifies.
    pub injected_width: Option<u32>,
    pub seed: u64,
}

impl McAttackConfig {
    pub fn new(bits_per_frame: u8, d_max: usize, attack_frames: u64, seed: u64) -> Self {
        Self {
            bits_per_frame,
            d_max,
            attack_frames,
            frames_per_session: 5_000,
            injected_width: None,
            seed,
        }
    }
}

/// Aggregated verdict statistics over the fabricated frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McAttackReport {
    pub config: McAttackConfig,
    pub attack_frames: u64,
    pub detected_frames: u64,
    /// Length of each maximal undetected run -> occurrence count.
    pub run_histogram: BTreeMap<u64, u64>,
    pub max_run: u64,
    pub max_run_count: u64,
}

impl McAttackReport {
    pub fn detection_rate(&self) -> f64 {
        self.detected_frames as f64 / self.attack_frames as f64
    }

    /// Fraction of fabricated frames that started a run of the observed
    /// maximum length; the empirical chance of the attacker's best outcome.
    pub fn max_run_probability(&self) -> f64 {
        self.max_run_count as f64 / self.attack_frames as f64
    }

    /// Most frequent undetected-run length.
    pub fn mode_run_length(&self) -> Option<u64> {
        self.run_histogram
            .iter()
            .max_by_key(|&(len, count)| (*count, std::cmp::Reverse(*len)))
            .map(|(len, _)| *len)
    }
}

/// The fakes never feed detectors here, so frames can be minimal. The width
/// only needs to clear the hop alphabet's span of 2^(b+1) - 2.
const MC_SCENE_HEIGHT: u32 = 8;

fn mc_scene_width(bits: u8) -> u32 {
    32u32.max(1u32 << (bits as u32 + 1))
}

fn session_config(cfg: &McAttackConfig, chunk_index: u64, chunk_frames: u64) -> SimConfig {
    SimConfig {
        fps: 20,
        scene: SceneConfig {
            seed: cfg.seed ^ 0xA5A5_5A5A,
            width: mc_scene_width(cfg.bits_per_frame),
            height: MC_SCENE_HEIGHT,
            motion: (0.0, 0.0),
            texture_scale: 4.0,
            corner_density: 1.0,
        },
        loss_prob: 0.0,
        camera_delay_frames: cfg.d_max.min(1) as u32,
        duration_frames: 2 + chunk_frames,
        seed: cfg.seed.wrapping_add(chunk_index).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        record_capture: false,
        max_payload: crate::protocol::DEFAULT_MAX_PAYLOAD,
    }
}

/// Run seeded sessions of a fixed-width full-frame attacker against the
/// width defense and aggregate per-frame verdicts and undetected-run
/// lengths. Runs do not continue across session boundaries.
pub fn monte_carlo_attack(cfg: &McAttackConfig) -> Result<McAttackReport, AnalyticsError> {
    if cfg.attack_frames == 0 || cfg.frames_per_session == 0 {
        return Err(AnalyticsError::Param("frame counts must be positive".into()));
    }
    if cfg.d_max > 1 {
        return Err(AnalyticsError::Param(format!(
            "the camera model applies requests at most one frame late; d_max {} unrealizable",
            cfg.d_max
        )));
    }
    let injected_width = cfg.injected_width.unwrap_or_else(|| mc_scene_width(cfg.bits_per_frame));

    let mut report = McAttackReport {
        config: cfg.clone(),
        attack_frames: 0,
        detected_frames: 0,
        run_histogram: BTreeMap::new(),
        max_run: 0,
        max_run_count: 0,
    };

    let mut remaining = cfg.attack_frames;
    let mut chunk_index = 0u64;
    while remaining > 0 {
        let chunk = remaining.min(cfg.frames_per_session);
        remaining -= chunk;
        let sim = session_config(cfg, chunk_index, chunk);
        let plan = AttackPlan {
            kind: AttackKind::FullFrame,
            start_frame: 2,
            duration_frames: chunk,
            payload: InjectionPayload::Template {
                label: SignLabel::StopSign,
                width: 6,
                height: 6,
            },
            injected_width,
            stripe_rows: 2,
            patch_position: (0, 0),
            metadata_policy: MetadataPolicy::Static,
            timestamp_policy: TimestampPolicy::FromZero,
            rate_multiplier: 1.0,
            block_id_base: 1_000_000,
        };
        let defense = DefensePlan {
            key: format!("mc-{}-{}", cfg.seed, chunk_index).into_bytes(),
            bits_per_frame: cfg.bits_per_frame,
            d_max: cfg.d_max,
        };
        let out = run_session(&sim, Some(&plan), Some(&defense))?;
        assert_eq!(out.frames.len(), out.width_verdicts.len());

        let mut run_len = 0u64;
        let close_run = |len: &mut u64, hist: &mut BTreeMap<u64, u64>| {
            if *len > 0 {
                *hist.entry(*len).or_insert(0) += 1;
                *len = 0;
            }
        };
        for (frame, verdict) in out.frames.iter().zip(&out.width_verdicts) {
            if frame.leader_link != Link::AttackerToAdas {
                continue;
            }
            report.attack_frames += 1;
            match verdict.verdict {
                Verdict::Invalid => {
                    report.detected_frames += 1;
                    close_run(&mut run_len, &mut report.run_histogram);
                }
                Verdict::Valid => run_len += 1,
            }
        }
        close_run(&mut run_len, &mut report.run_histogram);
        chunk_index += 1;
    }

    if let Some((&len, &count)) = report.run_histogram.iter().next_back() {
        report.max_run = len;
        report.max_run_count = count;
    }
    debug_assert_eq!(report.attack_frames, cfg.attack_frames);
    Ok(report)
}
