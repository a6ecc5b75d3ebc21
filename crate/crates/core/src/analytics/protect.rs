//! Measures how width mismatch distorts injected signs: for each feasible
//! width difference, splice forged stripe bytes into legitimate frames,
//! reinterpret at the true width, demosaic, and ask the toy sign detector
//! whether the sign survived.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::pixel::{
    demosaic, make_template, mosaic, mosaic_region, render_on_background, synth_frame,
    toy_sign_detect, PixelBuffer, SceneConfig, SignLabel, SIGN_SCORE_THRESHOLD, TOY_DETECT_STRIDE,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtectConfig {
    pub bits_per_frame: u8,
    /// Scene at the camera's maximum width; true widths hop below it.
    pub scene: SceneConfig,
    pub stripe_rows: u32,
    /// Template size for whole-stripe injections.
    pub stripe_sign: (u32, u32),
    /// Template size for patch injections.
    pub patch_sign: (u32, u32),
    pub label: SignLabel,
    pub trials_per_diff: u32,
    pub seed: u64,
}

impl ProtectConfig {
    /// Synthetic corpus sized so every hop width still fits the templates.
    /// The background keeps blob density near zero and texture finer than
    /// the templates: the measurement is about the injected sign, so the
    /// scene must not score against the templates on its own.
    pub fn standard(bits_per_frame: u8, trials_per_diff: u32, seed: u64) -> Self {
        Self {
            bits_per_frame,
            scene: SceneConfig {
                seed,
                width: 96,
                height: 64,
                motion: (2.0, 0.0),
                texture_scale: 4.0,
                corner_density: 1.0,
            },
            stripe_rows: 32,
            stripe_sign: (24, 24),
            patch_sign: (24, 24),
            label: SignLabel::StopSign,
            trials_per_diff,
            seed,
        }
    }

    fn validate(&self) -> Result<(), AnalyticsError> {
        let bad = |msg: String| Err(AnalyticsError::Param(msg));
        if self.bits_per_frame == 0 || self.bits_per_frame > 8 {
            return bad(format!("bits_per_frame {} outside 1..=8", self.bits_per_frame));
        }
        self.scene.validate()?;
        let span = 2 * ((1u32 << self.bits_per_frame) - 1);
        if self.scene.width <= span {
            return bad(format!(
                "scene width {} cannot host a hop span of {span}",
                self.scene.width
            ));
        }
        let w_min = self.scene.width - span;
        if self.stripe_rows == 0 || self.stripe_rows % 2 != 0 || self.stripe_rows > self.scene.height
        {
            return bad(format!("stripe_rows {} invalid for the scene", self.stripe_rows));
        }
        for (name, (w, h)) in [("stripe_sign", self.stripe_sign), ("patch_sign", self.patch_sign)] {
            if w == 0 || h == 0 || w % 2 != 0 || h % 2 != 0 {
                return bad(format!("{name} {w}x{h} must have positive even sides"));
            }
            if w > w_min || h > self.stripe_rows {
                return bad(format!("{name} {w}x{h} does not fit every hop width"));
            }
        }
        if self.trials_per_diff == 0 {
            return bad("trials_per_diff must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffStats {
    /// Injected width minus true width, in pixels (always even).
    pub width_diff: i64,
    pub injections: u64,
    pub recognized: u64,
}

impl DiffStats {
    pub fn recognition_rate(&self) -> f64 {
        self.recognized as f64 / self.injections as f64
    }

    /// Fraction of injections whose sign the detector missed.
    pub fn defense_rate(&self) -> f64 {
        1.0 - self.recognition_rate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtectReport {
    pub config: ProtectConfig,
    /// Stripe injections: forged width minus true width, both hopping.
    pub stripe: Vec<DiffStats>,
    /// Patch injections reuse the previous frame's width; both signs occur.
    pub patch: Vec<DiffStats>,
}

impl ProtectReport {
    /// Stripe and patch pooled by |width difference|.
    pub fn pooled_by_abs_diff(&self) -> Vec<DiffStats> {
        let mut pooled: BTreeMap<u64, DiffStats> = BTreeMap::new();
        for stats in self.stripe.iter().chain(&self.patch) {
            let key = stats.width_diff.unsigned_abs();
            let entry = pooled.entry(key).or_insert(DiffStats {
                width_diff: key as i64,
                injections: 0,
                recognized: 0,
            });
            entry.injections += stats.injections;
            entry.recognized += stats.recognized;
        }
        pooled.into_values().collect()
    }

    /// Defense rate when both widths are drawn uniformly and independently
    /// from the symbol table: per-difference rates weighted by the number
    /// of symbol pairs yielding each difference. Tracks p_protection(b) up
    /// to the toy detector's error rates.
    pub fn uniform_symbol_defense_rate(&self) -> f64 {
        let symbols = 1i64 << self.config.bits_per_frame;
        let style_rate = |stats: &[DiffStats]| {
            let mut weighted = 0.0;
            let mut total = 0.0;
            for s in stats {
                let pairs = (symbols - s.width_diff.abs() / 2) as f64;
                weighted += pairs * s.defense_rate();
                total += pairs;
            }
            weighted / total
        };
        (style_rate(&self.stripe) + style_rate(&self.patch)) / 2.0
    }
}

fn splice_view(
    true_frame: &PixelBuffer,
    stripe_bytes: &[u8],
) -> Result<PixelBuffer, AnalyticsError> {
    let mut bytes = true_frame.bytes().to_vec();
    let n = stripe_bytes.len().min(bytes.len());
    bytes[..n].copy_from_slice(&stripe_bytes[..n]);
    Ok(PixelBuffer::new(true_frame.width(), true_frame.height(), bytes)?)
}

/// Run the full corpus. Deterministic in the config seed.
pub fn protection_eval(cfg: &ProtectConfig) -> Result<ProtectReport, AnalyticsError> {
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let w_max = cfg.scene.width;
    let symbols = 1u32 << cfg.bits_per_frame;

    let stripe_template = make_template(cfg.label, cfg.stripe_sign.0, cfg.stripe_sign.1)?;
    let patch_template = make_template(cfg.label, cfg.patch_sign.0, cfg.patch_sign.1)?;
    let max_k = (symbols - 1) as i64;

    // Whole-stripe forgeries are rendered at the width the attacker lays
    // them out at, one per symbol; the same forged bytes then land on true
    // frames of every feasible width.
    let mut stripe_bytes_by_k = Vec::new();
    for k in 0..symbols {
        let w_inj = w_max - 2 * k;
        let img = render_on_background(
            &stripe_template,
            w_inj,
            cfg.stripe_rows,
            (cfg.stripe_rows - cfg.stripe_sign.1) / 2 / 2 * 2,
            (w_inj - cfg.stripe_sign.0) / 2 / 2 * 2,
        )?;
        stripe_bytes_by_k.push(mosaic(&img)?.into_bytes());
    }

    let mut stripe = Vec::new();
    for half in -max_k..=max_k {
        let diff = 2 * half;
        let mut stats = DiffStats { width_diff: diff, injections: 0, recognized: 0 };
        for _ in 0..cfg.trials_per_diff {
            let mut scene = cfg.scene.clone();
            scene.seed = rng.gen();
            // diff = w_inj - w_true = 2 (k_true - k_inj); sample a feasible
            // injected symbol, derive the true one.
            let lo = 0.max(-half);
            let hi = max_k.min(max_k - half);
            debug_assert!(lo <= hi);
            let k_inj = rng.gen_range(lo..=hi);
            let k_true = k_inj + half;
            let w_true = w_max - 2 * k_true as u32;

            let true_frame = synth_frame(&scene, 0)?.crop_columns(w_true)?;
            let view = splice_view(&true_frame, &stripe_bytes_by_k[k_inj as usize])?;
            let rgb = demosaic(&view)?;
            let score = toy_sign_detect(&rgb, &stripe_template, TOY_DETECT_STRIDE)?;
            stats.injections += 1;
            if score >= SIGN_SCORE_THRESHOLD {
                stats.recognized += 1;
            }
        }
        stripe.push(stats);
    }

    let mut patch = Vec::new();
    for half in -max_k..=max_k {
        let diff = 2 * half;
        let mut stats = DiffStats { width_diff: diff, injections: 0, recognized: 0 };
        for _ in 0..cfg.trials_per_diff {
            let mut scene = cfg.scene.clone();
            scene.seed = rng.gen();
            // diff = w_prev - w_true = 2 (k_true - k_prev); sample a feasible
            // previous symbol, derive the current one.
            let lo = 0.max(-half);
            let hi = max_k.min(max_k - half);
            debug_assert!(lo <= hi);
            let k_prev = rng.gen_range(lo..=hi);
            let k_true = k_prev + half;
            let w_prev = w_max - 2 * k_prev as u32;
            let w_true = w_max - 2 * k_true as u32;

            let mut prev = synth_frame(&scene, 0)?.crop_columns(w_prev)?;
            let (pw, ph) = cfg.patch_sign;
            let pr = rng.gen_range(0..=(cfg.stripe_rows - ph) / 2) * 2;
            let pc = rng.gen_range(0..=(w_prev - pw) / 2) * 2;
            let patch_raw = mosaic_region(&patch_template.image, pr, pc);
            for r in 0..ph {
                let dst = ((pr + r) * w_prev + pc) as usize;
                let src = (r * pw) as usize;
                prev.bytes_mut()[dst..dst + pw as usize]
                    .copy_from_slice(&patch_raw[src..src + pw as usize]);
            }
            let stripe_len = (cfg.stripe_rows * w_prev) as usize;

            let true_frame = synth_frame(&scene, 1)?.crop_columns(w_true)?;
            let view = splice_view(&true_frame, &prev.bytes()[..stripe_len])?;
            let rgb = demosaic(&view)?;
            let score = toy_sign_detect(&rgb, &patch_template, TOY_DETECT_STRIDE)?;
            stats.injections += 1;
            if score >= SIGN_SCORE_THRESHOLD {
                stats.recognized += 1;
            }
        }
        patch.push(stats);
    }

    Ok(ProtectReport { config: cfg.clone(), stripe, patch })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_difference_injections_are_recognized() {
        let cfg = ProtectConfig::standard(2, 40, 5);
        let report = protection_eval(&cfg).unwrap();
        let stripe0 = report.stripe.iter().find(|s| s.width_diff == 0).unwrap();
        assert!(stripe0.recognition_rate() >= 0.95, "stripe {:?}", stripe0);
        let patch0 = report.patch.iter().find(|s| s.width_diff == 0).unwrap();
        assert!(patch0.recognition_rate() >= 0.9, "patch {:?}", patch0);
    }

    #[test]
    fn large_difference_defends() {
        let cfg = ProtectConfig::standard(2, 40, 6);
        let report = protection_eval(&cfg).unwrap();
        for stats in report.stripe.iter().chain(&report.patch) {
            if stats.width_diff.abs() >= 4 {
                assert!(stats.defense_rate() >= 0.9, "{stats:?}");
            } else if stats.width_diff != 0 {
                assert!(stats.defense_rate() >= 0.7, "{stats:?}");
            }
        }
    }

    #[test]
    fn covers_expected_difference_range() {
        let cfg = ProtectConfig::standard(3, 1, 7);
        let report = protection_eval(&cfg).unwrap();
        // Every feasible even difference in [-(2^(b+1)-2), 2^(b+1)-2], both styles.
        let expected: Vec<i64> = (-7..=7).map(|m| 2 * m).collect();
        let stripe_diffs: Vec<i64> = report.stripe.iter().map(|s| s.width_diff).collect();
        assert_eq!(stripe_diffs, expected);
        let patch_diffs: Vec<i64> = report.patch.iter().map(|s| s.width_diff).collect();
        assert_eq!(patch_diffs, expected);
    }

    #[test]
    fn uniform_symbol_aggregate_tracks_the_guess_probability() {
        let cfg = ProtectConfig::standard(2, 40, 8);
        let report = protection_eval(&cfg).unwrap();
        // With both widths uniform the attacker guesses right 1 in 2^b
        // times; the aggregate defense rate sits at 1 - 2^-b up to the toy
        // detector's own error rates.
        let aggregate = report.uniform_symbol_defense_rate();
        let expected = crate::analytics::p_protection(cfg.bits_per_frame);
        assert!((aggregate - expected).abs() <= 0.05, "aggregate {aggregate} vs {expected}");
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = ProtectConfig::standard(1, 10, 9);
        let a = protection_eval(&cfg).unwrap();
        let b = protection_eval(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation_rejects_bad_geometry() {
        let mut cfg = ProtectConfig::standard(2, 10, 1);
        cfg.stripe_rows = 33;
        assert!(protection_eval(&cfg).is_err());
        let mut cfg = ProtectConfig::standard(8, 10, 1);
        cfg.scene.width = 96; // hop span 510 cannot fit
        assert!(protection_eval(&cfg).is_err());
        let mut cfg = ProtectConfig::standard(2, 10, 1);
        cfg.patch_sign = (13, 12);
        assert!(protection_eval(&cfg).is_err());
    }
}
