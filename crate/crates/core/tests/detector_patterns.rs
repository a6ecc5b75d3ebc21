//! Which passive detectors fire, and when, for each attack posture.
//!
//! The full-frame attack has a fixed signature: content detectors (histogram,
//! optical flow) fire at the boundaries where the image world switches,
//! the MSE check fires on every interior fake because the loop repeats one
//! image, and the timestamp-rate check fires throughout because the fakes
//! arrive at twice the nominal rate. Metadata detectors depend on the forgery
//! policy: static counters betray the start, sniffed counters survive until
//! the real camera comes back and collides.

use gvspsim_core::attack::{
    AttackKind, AttackPlan, InjectionPayload, MetadataPolicy, TimestampPolicy,
};
use gvspsim_core::detect::{run_detectors, DetectorConfig, DetectorVerdict, FrameObservation};
use gvspsim_core::pixel::SceneConfig;
use gvspsim_core::sim::run_session;
use gvspsim_core::{SignLabel, SimConfig};

const WIDTH: u32 = 128;
const HEIGHT: u32 = 64;

fn config(seed: u64, frames: u64) -> SimConfig {
    SimConfig {
        fps: 20,
        scene: SceneConfig {
            seed: 5,
            width: WIDTH,
            height: HEIGHT,
            motion: (2.0, 0.0),
            texture_scale: 8.0,
            corner_density: 2500.0,
        },
        loss_prob: 0.0,
        camera_delay_frames: 0,
        duration_frames: frames,
        seed,
        record_capture: false,
        max_payload: 2000,
    }
}

fn full_frame_plan(metadata: MetadataPolicy, timestamp: TimestampPolicy) -> AttackPlan {
    AttackPlan {
        kind: AttackKind::FullFrame,
        start_frame: 20,
        duration_frames: 20,
        payload: InjectionPayload::Template { label: SignLabel::StopSign, width: 32, height: 32 },
        injected_width: WIDTH,
        stripe_rows: 0,
        patch_position: (0, 0),
        metadata_policy: metadata,
        timestamp_policy: timestamp,
        rate_multiplier: 2.0,
        block_id_base: 9001,
    }
}

fn verdicts(sim: &SimConfig, plan: Option<&AttackPlan>) -> Vec<DetectorVerdict> {
    let out = run_session(sim, plan, None).unwrap();
    let obs: Vec<FrameObservation> = out.frames.iter().map(|f| f.observation()).collect();
    let cfg = DetectorConfig::new(Some(WIDTH), HEIGHT, sim.period_ns());
    run_detectors(&obs, &cfg)
}

#[test]
fn clean_stream_raises_no_alerts() {
    let sim = config(31, 40);
    for v in verdicts(&sim, None) {
        assert!(!v.combined, "false alarm at frame {}: {v:?}", v.frame_index);
    }
}

#[test]
fn static_full_frame_attack_pattern() {
    let sim = config(32, 60);
    let plan = full_frame_plan(MetadataPolicy::Static, TimestampPolicy::FromZero);
    let vs = verdicts(&sim, Some(&plan));
    // 20 camera frames, 40 fakes at double rate, 20 camera frames.
    assert_eq!(vs.len(), 80);

    for v in &vs[..20] {
        assert!(!v.combined, "pre-attack alarm: {v:?}");
    }
    let start = &vs[20];
    assert!(start.frame_id && start.timestamp && start.timestamp_rate);
    assert!(start.histogram && start.optical_flow);
    assert!(!start.mse, "content switch is not a frozen loop yet");

    for v in &vs[21..60] {
        assert!(v.mse, "identical fakes at frame {}", v.frame_index);
        assert!(v.timestamp_rate, "double-rate fakes at frame {}", v.frame_index);
        assert!(
            !v.frame_id && !v.timestamp && !v.histogram && !v.optical_flow,
            "interior fake should only trip mse and rate: {v:?}"
        );
    }

    let end = &vs[60];
    assert!(end.frame_id && end.timestamp && end.timestamp_rate);
    assert!(end.histogram && end.optical_flow);
    assert!(!end.mse);

    for v in &vs[61..] {
        assert!(!v.combined, "post-attack alarm: {v:?}");
    }
    for v in &vs {
        assert!(!v.constant_meta, "width and format never change here");
    }
}

#[test]
fn sniffed_metadata_hides_the_start_but_not_the_end() {
    let sim = config(33, 60);
    let plan = full_frame_plan(MetadataPolicy::SniffAdaptive, TimestampPolicy::NominalAdvance);
    let vs = verdicts(&sim, Some(&plan));
    assert_eq!(vs.len(), 80);

    // At the start the counters continue seamlessly from sniffed values; only
    // the content detectors notice the switch.
    let start = &vs[20];
    assert!(!start.frame_id && !start.timestamp && !start.timestamp_rate);
    assert!(start.histogram && start.optical_flow);

    // The camera never saw the fakes, so its own counter resumes 40 ids
    // behind the forged sequence: the collision marks the attack's end.
    let end = &vs[60];
    assert!(end.frame_id, "camera id resumes behind the forged ids");
    assert!(end.timestamp && end.timestamp_rate);
    assert!(end.histogram && end.optical_flow);

    for v in &vs[21..60] {
        assert!(v.mse && v.timestamp_rate, "interior fake: {v:?}");
        assert!(!v.frame_id && !v.timestamp, "sniffed counters stay plausible: {v:?}");
    }
    for v in vs[..20].iter().chain(&vs[61..]) {
        assert!(!v.combined, "alarm outside the attack: {v:?}");
    }
}

#[test]
fn stripe_injection_trips_content_checks_only() {
    let sim = config(34, 30);
    let plan = AttackPlan {
        kind: AttackKind::Stripe,
        start_frame: 10,
        duration_frames: 5,
        payload: InjectionPayload::Template { label: SignLabel::StopSign, width: 32, height: 32 },
        injected_width: WIDTH,
        stripe_rows: 32,
        patch_position: (0, 0),
        metadata_policy: MetadataPolicy::Static,
        timestamp_policy: TimestampPolicy::FromZero,
        rate_multiplier: 1.0,
        block_id_base: 1,
    };
    let vs = verdicts(&sim, Some(&plan));
    assert_eq!(vs.len(), 30);

    // The camera's own leader and trailer frame the merged packets, so every
    // metadata check stays green; half the image changing under the race is
    // what the content checks see.
    for v in &vs {
        assert!(
            !v.constant_meta && !v.frame_id && !v.timestamp && !v.timestamp_rate,
            "stripe forges no metadata: {v:?}"
        );
    }
    let hist_hits: Vec<u64> =
        vs.iter().filter(|v| v.histogram).map(|v| v.frame_index).collect();
    assert!(
        hist_hits.contains(&10) && hist_hits.contains(&15),
        "histogram should notice the stripe appearing and vanishing, got {hist_hits:?}"
    );
}
