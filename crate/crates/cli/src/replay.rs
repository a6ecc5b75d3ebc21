//! `replay`: recompute verdicts from a capture file.
//!
//! The replay path feeds the recorded bytes through the same observer the
//! live run used, so its outputs match the live run's exactly. Detector
//! thresholds may be overridden to re-judge old traffic.

use crate::reports::{
    config_comment, detector_csv, width_csv, write_json, write_text, AlertTotals, WidthTotals,
};
use crate::scenario::Scenario;
use anyhow::{Context, Result};
use clap::Args;
use gvspsim_core::detect::{run_detectors, DetectorConfig, FrameObservation};
use gvspsim_core::sim::{replay_capture, SessionEcho};
use gvspsim_core::Capture;
use serde::Serialize;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Capture file from a previous `simulate`.
    #[arg(long)]
    pub capture: PathBuf,
    /// Scenario file supplying detector overrides; defaults to the stock
    /// configuration derived from the capture itself.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Directory for all written artifacts.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Re-judge with a different frozen-scene MSE threshold.
    #[arg(long)]
    pub mse_threshold: Option<f64>,
}

#[derive(Serialize)]
struct ReplaySummary {
    capture_file: String,
    config: SessionEcho,
    detector_config: DetectorConfig,
    frames: u64,
    alerts: AlertTotals,
    #[serde(skip_serializing_if = "Option::is_none")]
    width: Option<WidthTotals>,
    files: Vec<String>,
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<()> {
    let file = File::open(&args.capture)
        .with_context(|| format!("opening {}", args.capture.display()))?;
    let capture = Capture::read_from(BufReader::new(file))
        .with_context(|| format!("reading {}", args.capture.display()))?;
    let echo: SessionEcho = serde_json::from_str(&capture.config_json)
        .with_context(|| format!("capture {} config echo", args.capture.display()))?;

    let mut detector_config = match &args.scenario {
        Some(path) => Scenario::load(path)?.detector_config(),
        None => {
            let expected_width =
                if echo.defense.is_some() { None } else { Some(echo.sim.scene.width) };
            DetectorConfig::new(expected_width, echo.sim.scene.height, echo.sim.period_ns())
        }
    };
    if let Some(t) = args.mse_threshold {
        detector_config.mse_threshold = t;
    }

    let (frames, width_verdicts) = replay_capture(&capture)?;
    let observations: Vec<FrameObservation> = frames.iter().map(|f| f.observation()).collect();
    let verdicts = run_detectors(&observations, &detector_config);

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let comments = vec![
        format!("# config {}\n", capture.config_json),
        config_comment("detectors", &detector_config),
    ];

    let mut files = vec!["replay_verdicts.csv".to_string()];
    write_text(&args.out_dir.join("replay_verdicts.csv"), &detector_csv(&comments, &verdicts))?;
    let width = if echo.defense.is_some() {
        write_text(
            &args.out_dir.join("replay_width_verdicts.csv"),
            &width_csv(&comments, &width_verdicts),
        )?;
        files.push("replay_width_verdicts.csv".to_string());
        Some(WidthTotals::tally(&width_verdicts))
    } else {
        None
    };
    files.push("replay_summary.json".to_string());

    let summary = ReplaySummary {
        capture_file: args.capture.display().to_string(),
        config: echo,
        detector_config,
        frames: frames.len() as u64,
        alerts: AlertTotals::tally(&verdicts),
        width,
        files,
    };
    write_json(&args.out_dir.join("replay_summary.json"), &summary)?;

    println!(
        "replay: {} frames, {} alert frames, wrote {}",
        summary.frames,
        summary.alerts.combined,
        args.out_dir.display()
    );
    Ok(())
}
