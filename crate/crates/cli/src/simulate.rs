//! `simulate`: run a scenario end to end and write its artifacts.

use crate::reports::{
    config_comment, detector_csv, width_csv, write_json, write_text, AlertTotals, WidthTotals,
};
use crate::scenario::Scenario;
use anyhow::{Context, Result};
use clap::Args;
use gvspsim_core::detect::{run_detectors, DetectorConfig, FrameObservation};
use gvspsim_core::sim::{run_session, AttackEvent};
use gvspsim_core::Link;
use serde::Serialize;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Directory for all written artifacts.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Override the scenario's simulation seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct SimulateSummary {
    scenario: Scenario,
    detector_config: DetectorConfig,
    frames: u64,
    attack_frames: u64,
    alerts: AlertTotals,
    #[serde(skip_serializing_if = "Option::is_none")]
    width: Option<WidthTotals>,
    attack_log: Vec<AttackEvent>,
    files: Vec<String>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut scenario = Scenario::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.sim.seed = seed;
    }
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let defense = scenario.defense_plan();
    let out = run_session(&scenario.sim, scenario.attack.as_ref(), defense.as_ref())?;

    let detector_config = scenario.detector_config();
    let observations: Vec<FrameObservation> = out.frames.iter().map(|f| f.observation()).collect();
    let verdicts = run_detectors(&observations, &detector_config);

    let comments = vec![
        format!("# config {}\n", out.capture.config_json),
        config_comment("detectors", &detector_config),
    ];

    let mut files = Vec::new();
    if scenario.sim.record_capture {
        let path = args.out_dir.join(&scenario.outputs.capture);
        let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        out.capture
            .write_to(BufWriter::new(file))
            .with_context(|| format!("writing {}", path.display()))?;
        files.push(scenario.outputs.capture.clone());
    }

    let verdict_path = args.out_dir.join(&scenario.outputs.verdicts);
    write_text(&verdict_path, &detector_csv(&comments, &verdicts))?;
    files.push(scenario.outputs.verdicts.clone());

    let width = if defense.is_some() {
        let path = args.out_dir.join(&scenario.outputs.width_verdicts);
        write_text(&path, &width_csv(&comments, &out.width_verdicts))?;
        files.push(scenario.outputs.width_verdicts.clone());
        Some(WidthTotals::tally(&out.width_verdicts))
    } else {
        None
    };

    let attack_frames =
        out.frames.iter().filter(|f| f.leader_link == Link::AttackerToAdas).count() as u64;
    let alerts = AlertTotals::tally(&verdicts);
    let summary = SimulateSummary {
        scenario: scenario.clone(),
        detector_config,
        frames: out.frames.len() as u64,
        attack_frames,
        alerts,
        width,
        attack_log: out.attack_log,
        files: {
            let mut f = files.clone();
            f.push(scenario.outputs.summary.clone());
            f
        },
    };
    write_json(&args.out_dir.join(&scenario.outputs.summary), &summary)?;

    println!(
        "simulate: {} frames ({} injected), {} alert frames, {} files in {}",
        summary.frames,
        summary.attack_frames,
        summary.alerts.combined,
        summary.files.len(),
        args.out_dir.display()
    );
    Ok(())
}
