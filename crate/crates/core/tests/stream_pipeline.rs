//! End-to-end checks of the session loop: loss accounting, the anatomy of
//! each injection attack on the wire, and capture replay equivalence.

use gvspsim_core::attack::{
    AttackKind, AttackPlan, InjectionPayload, MetadataPolicy, TimestampPolicy,
};
use gvspsim_core::defense::DefensePlan;
use gvspsim_core::pixel::SceneConfig;
use gvspsim_core::sim::{replay_capture, run_session};
use gvspsim_core::{Link, SignLabel, SimConfig};

fn base_config(seed: u64, frames: u64) -> SimConfig {
    SimConfig {
        fps: 20,
        scene: SceneConfig {
            seed: 7,
            width: 96,
            height: 64,
            motion: (2.0, 0.0),
            texture_scale: 8.0,
            corner_density: 2500.0,
        },
        loss_prob: 0.0,
        camera_delay_frames: 0,
        duration_frames: frames,
        seed,
        record_capture: true,
        max_payload: 1000,
    }
}

fn stripe_plan(start: u64, duration: u64, injected_width: u32) -> AttackPlan {
    AttackPlan {
        kind: AttackKind::Stripe,
        start_frame: start,
        duration_frames: duration,
        payload: InjectionPayload::Template { label: SignLabel::StopSign, width: 24, height: 24 },
        injected_width,
        stripe_rows: 32,
        patch_position: (0, 0),
        metadata_policy: MetadataPolicy::Static,
        timestamp_policy: TimestampPolicy::FromZero,
        rate_multiplier: 1.0,
        block_id_base: 9001,
    }
}

#[test]
fn loss_rate_matches_configuration() {
    let mut config = base_config(11, 40);
    config.loss_prob = 0.2;
    let out = run_session(&config, None, None).unwrap();
    assert_eq!(out.frames.len(), 40, "leaders and trailers are never dropped");

    // 96*64 = 6144 bytes in 7 packets per frame, 280 Bernoulli(0.2) draws.
    let per_frame = (96usize * 64).div_ceil(1000);
    let total = (per_frame * 40) as f64;
    let missing: usize =
        out.frames.iter().map(|f| f.reassembly.missing_packet_ids.len()).sum();
    let expect = total * 0.2;
    let sd = (total * 0.2 * 0.8).sqrt();
    assert!(
        (missing as f64 - expect).abs() < 4.0 * sd,
        "missing {missing}, expected {expect:.1} +- {sd:.1}"
    );
}

#[test]
fn stripe_race_wins_the_top_rows_only() {
    let config = base_config(3, 12);
    let clean = run_session(&config, None, None).unwrap();
    let plan = stripe_plan(5, 4, 96);
    let out = run_session(&config, Some(&plan), None).unwrap();
    assert_eq!(out.frames.len(), 12);

    let stripe_bytes = 32 * 96;
    let race_packets = stripe_bytes / 1000 + 1;
    let contested = race_packets * 1000;
    for (f, cf) in out.frames.iter().zip(&clean.frames) {
        // No forged leader: the camera's own leader keeps the frame.
        assert_eq!(f.leader_link, Link::CameraToAdas);
        let attacked = (5..9).contains(&f.frame_index);
        if attacked {
            assert_eq!(f.attacker_payloads as usize, race_packets);
            assert_ne!(
                f.reassembly.buffer.bytes()[..stripe_bytes],
                cf.reassembly.buffer.bytes()[..stripe_bytes],
                "frame {} should carry forged stripe content",
                f.frame_index
            );
            // The camera's copies of the contested packets arrive second and
            // are recorded as overwrites, not corruption.
            assert_eq!(f.reassembly.overwritten_packet_ids.len(), race_packets);
        } else {
            assert_eq!(f.attacker_payloads, 0);
            assert_eq!(f.reassembly, cf.reassembly);
        }
        // Beyond the contested packet run the camera's bytes survive verbatim.
        assert_eq!(
            f.reassembly.buffer.bytes()[contested..],
            cf.reassembly.buffer.bytes()[contested..]
        );
    }
}

#[test]
fn full_frame_attack_silences_the_camera() {
    let config = base_config(5, 30);
    let plan = AttackPlan {
        kind: AttackKind::FullFrame,
        start_frame: 10,
        duration_frames: 8,
        payload: InjectionPayload::Template { label: SignLabel::StopSign, width: 24, height: 24 },
        injected_width: 96,
        stripe_rows: 0,
        patch_position: (0, 0),
        metadata_policy: MetadataPolicy::Static,
        timestamp_policy: TimestampPolicy::FromZero,
        rate_multiplier: 2.0,
        block_id_base: 9001,
    };
    let out = run_session(&config, Some(&plan), None).unwrap();

    // 10 camera frames, then 8 slots at double rate, then the rest.
    assert_eq!(out.frames.len(), 10 + 16 + 12);
    let links: Vec<Link> = out.frames.iter().map(|f| f.leader_link).collect();
    assert!(links[..10].iter().all(|&l| l == Link::CameraToAdas));
    assert!(links[10..26].iter().all(|&l| l == Link::AttackerToAdas));
    assert!(links[26..].iter().all(|&l| l == Link::CameraToAdas));

    // Fakes are one frozen image: identical bytes, consecutive forged ids.
    let fakes = &out.frames[10..26];
    for pair in fakes.windows(2) {
        assert_eq!(pair[0].reassembly.buffer, pair[1].reassembly.buffer);
        assert_eq!(
            pair[1].reassembly.leader.block_id,
            pair[0].reassembly.leader.block_id + 1
        );
    }
    assert_eq!(fakes[0].reassembly.leader.block_id, 9001);

    // The camera's own numbering continues where it stopped: no gap.
    assert_eq!(out.frames[9].reassembly.leader.block_id, 10);
    assert_eq!(out.frames[26].reassembly.leader.block_id, 11);
}

#[test]
fn patch_forgery_reuses_the_sniffed_frame() {
    let config = base_config(9, 10);
    let plan = AttackPlan {
        kind: AttackKind::Patch,
        start_frame: 4,
        duration_frames: 2,
        payload: InjectionPayload::Template { label: SignLabel::StopSign, width: 16, height: 16 },
        injected_width: 96,
        stripe_rows: 32,
        patch_position: (8, 40),
        metadata_policy: MetadataPolicy::Static,
        timestamp_policy: TimestampPolicy::FromZero,
        rate_multiplier: 1.0,
        block_id_base: 9001,
    };
    let clean = run_session(&config, None, None).unwrap();
    let out = run_session(&config, Some(&plan), None).unwrap();

    for (f, cf) in out.frames.iter().zip(&clean.frames) {
        if !(4..6).contains(&f.frame_index) {
            assert_eq!(f.reassembly, cf.reassembly);
            continue;
        }
        // The stripe is the sniffed frame's content. The tap rides the camera
        // link, so what the attacker replays is the camera's clean emission,
        // even when the receiver's copy of that frame was itself poisoned.
        let prev = &clean.frames[f.frame_index as usize - 1];
        let got = f.reassembly.buffer.bytes();
        let want = prev.reassembly.buffer.bytes();
        for r in 0..32usize {
            for c in 0..96usize {
                let in_patch = (8..24).contains(&r) && (40..56).contains(&c);
                if !in_patch {
                    assert_eq!(
                        got[r * 96 + c],
                        want[r * 96 + c],
                        "frame {} row {r} col {c}",
                        f.frame_index
                    );
                }
            }
        }
        // The patch itself is sign face, not scene: it differs from the clean
        // frame and from the clean previous frame at the same rectangle.
        let patch_row = |bytes: &[u8], r: usize| bytes[r * 96 + 40..r * 96 + 56].to_vec();
        assert_ne!(patch_row(got, 8), patch_row(want, 8));
        assert_ne!(patch_row(got, 8), patch_row(cf.reassembly.buffer.bytes(), 8));
    }
}

#[test]
fn replay_of_a_full_session_is_identical() {
    let mut config = base_config(21, 24);
    config.loss_prob = 0.1;
    let plan = stripe_plan(6, 6, 96);
    let defense = DefensePlan { key: b"pipeline".to_vec(), bits_per_frame: 2, d_max: 1 };
    let out = run_session(&config, Some(&plan), Some(&defense)).unwrap();

    let (frames, verdicts) = replay_capture(&out.capture).unwrap();
    assert_eq!(frames, out.frames);
    assert_eq!(verdicts, out.width_verdicts);

    let again = run_session(&config, Some(&plan), Some(&defense)).unwrap();
    assert_eq!(again.capture.records, out.capture.records);
    assert_eq!(again.capture.config_json, out.capture.config_json);
}
