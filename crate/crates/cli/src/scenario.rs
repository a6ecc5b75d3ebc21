//! Scenario files: one versioned JSON document per session.
//!
//! The file carries the simulator config verbatim, plus optional attack and
//! defense sections and threshold overrides for the detector bank. Parse
//! errors name the offending field by its path inside the document.

use anyhow::{bail, Context, Result};
use gvspsim_core::attack::AttackPlan;
use gvspsim_core::defense::DefensePlan;
use gvspsim_core::detect::DetectorConfig;
use gvspsim_core::SimConfig;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defense: Option<DefenseSpec>,
    #[serde(default)]
    pub detectors: DetectorOverrides,
    #[serde(default)]
    pub outputs: OutputNames,
}

/// Defense section: the key is a plain string; window parameters as in the
/// verifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenseSpec {
    pub key: String,
    pub bits_per_frame: u8,
    pub d_max: usize,
}

/// Detector thresholds to override; omitted fields keep stock values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_window: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts_tolerance_ns: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hist_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_error_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_min_match_fraction: Option<f64>,
}

impl DetectorOverrides {
    pub fn apply(&self, cfg: &mut DetectorConfig) {
        if let Some(v) = self.id_window {
            cfg.id_window = v;
        }
        if let Some(v) = self.ts_tolerance_ns {
            cfg.ts_tolerance_ns = v;
        }
        if let Some(v) = self.mse_threshold {
            cfg.mse_threshold = v;
        }
        if let Some(v) = self.hist_threshold {
            cfg.hist_threshold = v;
        }
        if let Some(v) = self.flow_error_threshold {
            cfg.flow_error_threshold = v;
        }
        if let Some(v) = self.flow_min_match_fraction {
            cfg.flow_min_match_fraction = v;
        }
    }
}

/// File names inside the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputNames {
    #[serde(default = "default_capture")]
    pub capture: String,
    #[serde(default = "default_verdicts")]
    pub verdicts: String,
    #[serde(default = "default_width_verdicts")]
    pub width_verdicts: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

fn default_capture() -> String {
    "capture.gvsc".into()
}
fn default_verdicts() -> String {
    "verdicts.csv".into()
}
fn default_width_verdicts() -> String {
    "width_verdicts.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}

impl Default for OutputNames {
    fn default() -> Self {
        Self {
            capture: default_capture(),
            verdicts: default_verdicts(),
            width_verdicts: default_width_verdicts(),
            summary: default_summary(),
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading scenario {}", path.display()))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let scenario: Scenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            anyhow::anyhow!("scenario {}: at {}: {}", path.display(), e.path(), e.inner())
        })?;
        if scenario.version != SCENARIO_VERSION {
            bail!(
                "scenario {}: version {} not supported (this build reads version {})",
                path.display(),
                scenario.version,
                SCENARIO_VERSION
            );
        }
        Ok(scenario)
    }

    pub fn defense_plan(&self) -> Option<DefensePlan> {
        self.defense.as_ref().map(|d| DefensePlan {
            key: d.key.clone().into_bytes(),
            bits_per_frame: d.bits_per_frame,
            d_max: d.d_max,
        })
    }

    /// Effective detector bank configuration. The width check is disabled
    /// whenever the defense legitimately varies the width.
    pub fn detector_config(&self) -> DetectorConfig {
        let expected_width = if self.defense.is_some() {
            None
        } else {
            Some(self.sim.scene.width)
        };
        let mut cfg =
            DetectorConfig::new(expected_width, self.sim.scene.height, self.sim.period_ns());
        self.detectors.apply(&mut cfg);
        cfg
    }
}
