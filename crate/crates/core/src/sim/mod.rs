//! Discrete-event session simulator.
//!
//! One session runs a camera, an optional width-hopping defense, an optional
//! attacker, and the receiving side on a single simulated clock. Every packet
//! crossing any link becomes a capture record; the receiving side consumes
//! exactly that record stream, live or replayed from a file, so replay
//! verdicts equal live verdicts by construction.

mod capture;

pub use capture::{Capture, CaptureError, CaptureRecord, Link, CAPTURE_MAGIC, CAPTURE_VERSION};

use crate::attack::{
    forge_full_frame, forge_patch, forge_stripe, AttackKind, AttackPlan, AttackPlanError,
    AttackerView, PatchForge,
};
use crate::defense::{DefenseError, DefensePlan, VerifierState, WidthScheduler, WidthVerdict};
use crate::detect::FrameObservation;
use crate::pixel::{synth_frame, PixelError, SceneConfig};
use crate::protocol::{
    decode_packet, encode_packet, fragment_frame, reassemble, GvcpCommand, GvcpRegister,
    LeaderPacket, ParseError, ReassemblyResult, StreamPacket, DEFAULT_MAX_PAYLOAD,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Lead time of attacker race packets over the camera burst they race.
pub const RACE_EPSILON_NS: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Frames per second of simulated time.
    pub fps: u32,
    pub scene: SceneConfig,
    /// Independent drop probability for each camera payload packet.
    /// No measured reference value exists; pick per experiment.
    pub loss_prob: f64,
    /// Width commands take effect this many frames late (0 or 1).
    pub camera_delay_frames: u32,
    pub duration_frames: u64,
    pub seed: u64,
    /// Keep the record list in memory / on disk. Off for bulk Monte Carlo.
    #[serde(default = "default_record_capture")]
    pub record_capture: bool,
    /// Payload bytes per stream packet.
    #[serde(default = "default_max_payload")]
    pub max_payload: usize,
}

fn default_record_capture() -> bool {
    true
}

fn default_max_payload() -> usize {
    DEFAULT_MAX_PAYLOAD
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.fps == 0 {
            return Err(SimError::BadConfig("fps must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.loss_prob) {
            return Err(SimError::BadConfig(format!(
                "loss_prob {} outside [0, 1)",
                self.loss_prob
            )));
        }
        if self.camera_delay_frames > 1 {
            return Err(SimError::BadConfig(format!(
                "camera_delay_frames {} not in {{0, 1}}",
                self.camera_delay_frames
            )));
        }
        if self.duration_frames == 0 {
            return Err(SimError::BadConfig("duration_frames must be positive".into()));
        }
        if self.max_payload == 0 || self.max_payload > DEFAULT_MAX_PAYLOAD {
            return Err(SimError::BadConfig(format!(
                "max_payload {} outside 1..={DEFAULT_MAX_PAYLOAD}",
                self.max_payload
            )));
        }
        self.scene.validate()?;
        Ok(())
    }

    pub fn period_ns(&self) -> u64 {
        1_000_000_000 / self.fps as u64
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Attack(#[from] AttackPlanError),
    #[error(transparent)]
    Defense(#[from] DefenseError),
    #[error(transparent)]
    Pixel(#[from] PixelError),
    #[error(transparent)]
    Capture(#[from] CaptureError),
    #[error("replay: {0}")]
    Replay(String),
}

/// Ground truth and reassembly outcome for one received frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    /// Arrival order, 0-based.
    pub frame_index: u64,
    /// Simulated receiver clock at frame completion.
    pub arrival_ns: u64,
    /// Link the frame's leader arrived on. AttackerToAdas marks a fabricated
    /// frame; analysis-side ground truth, invisible to the detectors.
    pub leader_link: Link,
    /// Payload packets whose winning copy came from the attacker.
    pub attacker_payloads: u32,
    pub reassembly: ReassemblyResult,
}

impl FrameRecord {
    /// What the detector bank is allowed to see.
    pub fn observation(&self) -> FrameObservation {
        FrameObservation {
            leader: self.reassembly.leader,
            buffer: self.reassembly.buffer.clone(),
            arrival_ns: self.arrival_ns,
        }
    }
}

/// Something the attacker logged instead of (or while) injecting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackEvent {
    pub time_ns: u64,
    pub detail: String,
}

/// Everything a session produced.
#[derive(Clone, Debug)]
pub struct SessionOutput {
    /// Record transcript; `records` is empty when record_capture was off,
    /// but the config echo is always present.
    pub capture: Capture,
    pub frames: Vec<FrameRecord>,
    /// One verdict per received frame when a defense was active.
    pub width_verdicts: Vec<WidthVerdict>,
    pub attack_log: Vec<AttackEvent>,
}

/// Configuration echo embedded in every capture. The defense key never
/// leaves the defense unit, so only window parameters are echoed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionEcho {
    pub sim: SimConfig,
    pub attack: Option<AttackPlan>,
    pub defense: Option<DefenseEcho>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefenseEcho {
    pub bits_per_frame: u8,
    pub d_max: usize,
}

struct PendingPayload {
    packet: crate::protocol::PayloadPacket,
    link: Link,
}

#[derive(Default)]
struct BlockAccum {
    leader: Option<(LeaderPacket, Link)>,
    payloads: Vec<PendingPayload>,
}

/// Receiver-side state machine: consumes capture records one at a time and
/// produces frames and width verdicts. The live run and replay both drive
/// this same type with the same records.
pub struct SessionObserver {
    max_payload: usize,
    blocks: BTreeMap<u64, BlockAccum>,
    frames: Vec<FrameRecord>,
    monitor: Option<VerifierState>,
    width_verdicts: Vec<WidthVerdict>,
}

impl SessionObserver {
    /// `defense`: (d_max, camera startup width). The verifier window is
    /// seeded with the startup width so a delayed camera's first frames,
    /// still at the width from before the first request, verify Valid.
    pub fn new(max_payload: usize, defense: Option<(usize, u32)>) -> Self {
        let monitor = defense.map(|(d_max, startup_width)| {
            let mut v = VerifierState::new(d_max);
            v.record_request(startup_width);
            v
        });
        Self {
            max_payload,
            blocks: BTreeMap::new(),
            frames: Vec::new(),
            monitor,
            width_verdicts: Vec::new(),
        }
    }

    pub fn consume(&mut self, record: &CaptureRecord) -> Result<(), ParseError> {
        let packet = decode_packet(&record.bytes)?;
        match record.link {
            Link::DefenseToCamera => {
                if let StreamPacket::Gvcp(cmd) = packet {
                    if cmd.register == GvcpRegister::Width {
                        if let Some(m) = &mut self.monitor {
                            m.record_request(cmd.value);
                        }
                    }
                }
            }
            Link::AttackerToCamera => {
                // Control traffic to the camera never reaches the receiver.
            }
            Link::CameraToAdas | Link::AttackerToAdas => match packet {
                StreamPacket::Leader(l) => {
                    let entry = self.blocks.entry(l.block_id).or_default();
                    if entry.leader.is_none() {
                        entry.leader = Some((l, record.link));
                    }
                }
                StreamPacket::Payload(p) => {
                    self.blocks
                        .entry(p.block_id)
                        .or_default()
                        .payloads
                        .push(PendingPayload { packet: p, link: record.link });
                }
                StreamPacket::Trailer(t) => self.finalize(t.block_id, record.time_ns),
                StreamPacket::Gvcp(_) => {}
            },
        }
        Ok(())
    }

    fn finalize(&mut self, block_id: u64, time_ns: u64) {
        let Some(accum) = self.blocks.remove(&block_id) else { return };
        let Some((leader, leader_link)) = accum.leader else { return };

        let mut packets = Vec::with_capacity(accum.payloads.len() + 1);
        packets.push(StreamPacket::Leader(leader));
        let mut first_from_attacker = 0u32;
        let mut seen = std::collections::BTreeSet::new();
        for p in &accum.payloads {
            if seen.insert(p.packet.packet_id) && p.link == Link::AttackerToAdas {
                first_from_attacker += 1;
            }
        }
        packets.extend(accum.payloads.into_iter().map(|p| StreamPacket::Payload(p.packet)));

        let reassembly = reassemble(&packets, None, self.max_payload)
            .expect("leader present by construction");
        if let Some(m) = &self.monitor {
            self.width_verdicts.push(m.verify(block_id, reassembly.leader.width));
        }
        self.frames.push(FrameRecord {
            frame_index: self.frames.len() as u64,
            arrival_ns: time_ns,
            leader_link,
            attacker_payloads: first_from_attacker,
            reassembly,
        });
    }

    pub fn finish(self) -> (Vec<FrameRecord>, Vec<WidthVerdict>) {
        (self.frames, self.width_verdicts)
    }
}

enum Ev {
    DefenseRequest,
    CameraEmit { slot: u64 },
    RaceInject,
    AttackStop,
    FakeEmit { j: u64 },
    AttackStart,
}

struct Scheduled {
    time: u64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

struct Agenda {
    heap: std::collections::BinaryHeap<std::cmp::Reverse<Scheduled>>,
    next_seq: u64,
}

impl Agenda {
    fn new() -> Self {
        Self { heap: std::collections::BinaryHeap::new(), next_seq: 0 }
    }

    fn push(&mut self, time: u64, ev: Ev) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(std::cmp::Reverse(Scheduled { time, seq, ev }));
    }

    fn pop(&mut self) -> Option<Scheduled> {
        self.heap.pop().map(|r| r.0)
    }
}

/// Run one complete session.
pub fn run_session(
    config: &SimConfig,
    attack: Option<&AttackPlan>,
    defense: Option<&DefensePlan>,
) -> Result<SessionOutput, SimError> {
    config.validate()?;
    if let Some(plan) = attack {
        plan.validate(config.scene.height, config.duration_frames)?;
    }
    let mut scheduler = defense
        .map(|d| WidthScheduler::new(&d.key, d.bits_per_frame, config.scene.width))
        .transpose()?;

    let echo = SessionEcho {
        sim: config.clone(),
        attack: attack.cloned(),
        defense: defense.map(|d| DefenseEcho { bits_per_frame: d.bits_per_frame, d_max: d.d_max }),
    };
    let config_json = serde_json::to_string(&echo).expect("config echo serializes");

    let period = config.period_ns();
    let eps = RACE_EPSILON_NS;
    let t_emit = |slot: u64| slot * period + period / 2;

    let mut agenda = Agenda::new();
    for slot in 0..config.duration_frames {
        if defense.is_some() {
            agenda.push(slot * period, Ev::DefenseRequest);
        }
        agenda.push(t_emit(slot), Ev::CameraEmit { slot });
    }
    if let Some(plan) = attack {
        match plan.kind {
            AttackKind::FullFrame => {
                let stop_t = t_emit(plan.start_frame) - 2 * eps;
                agenda.push(stop_t, Ev::AttackStop);
                let restart =
                    ((plan.start_frame + plan.duration_frames) * period + eps).max(stop_t + eps);
                agenda.push(restart, Ev::AttackStart);
            }
            AttackKind::Stripe | AttackKind::Patch => {
                for slot in plan.start_frame..plan.start_frame + plan.duration_frames {
                    agenda.push(t_emit(slot) - eps, Ev::RaceInject);
                }
            }
        }
    }

    let mut observer = SessionObserver::new(
        config.max_payload,
        defense.map(|d| (d.d_max, config.scene.width)),
    );
    let mut capture = Capture { config_json, records: Vec::new() };
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut requested: Vec<u32> = Vec::new();
    let mut camera_next_id: u64 = 1;
    let mut acquiring = true;
    let mut view = AttackerView::default();
    let mut frozen_view = AttackerView::default();
    let mut attack_log: Vec<AttackEvent> = Vec::new();

    let emit = |time: u64,
                    link: Link,
                    packets: &[StreamPacket],
                    observer: &mut SessionObserver,
                    capture: &mut Capture| {
        for p in packets {
            let record = CaptureRecord { time_ns: time, link, bytes: encode_packet(p) };
            observer.consume(&record).expect("self-encoded records parse");
            if config.record_capture {
                capture.records.push(record);
            }
        }
    };

    while let Some(Scheduled { time, ev, .. }) = agenda.pop() {
        match ev {
            Ev::DefenseRequest => {
                let s = scheduler.as_mut().expect("request events only exist with a defense");
                let w = s.next_width();
                requested.push(w);
                emit(
                    time,
                    Link::DefenseToCamera,
                    &[StreamPacket::Gvcp(GvcpCommand::width(w))],
                    &mut observer,
                    &mut capture,
                );
            }
            Ev::CameraEmit { slot } => {
                if !acquiring {
                    continue;
                }
                let full = synth_frame(&config.scene, slot)?;
                let delay = config.camera_delay_frames as u64;
                let eff_w = if defense.is_some() && slot >= delay {
                    requested
                        .get((slot - delay) as usize)
                        .copied()
                        .unwrap_or(config.scene.width)
                } else {
                    config.scene.width
                };
                let frame = full.crop_columns(eff_w)?;
                let block_id = camera_next_id;
                camera_next_id += 1;
                let packets = fragment_frame(&frame, block_id, time, config.max_payload);

                let mut survivors = Vec::with_capacity(packets.len());
                for p in packets {
                    let drop = matches!(p, StreamPacket::Payload(_))
                        && rng.gen::<f64>() < config.loss_prob;
                    if !drop {
                        survivors.push(p);
                    }
                }
                emit(time, Link::CameraToAdas, &survivors, &mut observer, &mut capture);

                // The tap sees the same survivors; the attacker's picture of
                // this frame has zeros where packets were lost.
                let seen = reassemble(&survivors, None, config.max_payload)
                    .expect("leader always survives");
                view.last_seen_leader = Some(seen.leader);
                view.last_frame_bytes = Some(seen.buffer.into_bytes());
            }
            Ev::RaceInject => {
                let plan = attack.expect("race events only exist with an attack");
                match plan.kind {
                    AttackKind::Stripe => {
                        let packets =
                            forge_stripe(plan, &view, config.scene.height, config.max_payload)?;
                        emit(time, Link::AttackerToAdas, &packets, &mut observer, &mut capture);
                    }
                    AttackKind::Patch => {
                        match forge_patch(plan, &view, config.max_payload)? {
                            PatchForge::Packets(packets) => {
                                emit(
                                    time,
                                    Link::AttackerToAdas,
                                    &packets,
                                    &mut observer,
                                    &mut capture,
                                );
                            }
                            PatchForge::Skipped(reason) => {
                                attack_log.push(AttackEvent {
                                    time_ns: time,
                                    detail: format!("patch injection skipped: {reason}"),
                                });
                            }
                        }
                    }
                    AttackKind::FullFrame => unreachable!("full frame uses stop/fake/start events"),
                }
            }
            Ev::AttackStop => {
                let plan = attack.expect("attack events only exist with an attack");
                emit(
                    time,
                    Link::AttackerToCamera,
                    &[StreamPacket::Gvcp(GvcpCommand::acquisition(false))],
                    &mut observer,
                    &mut capture,
                );
                acquiring = false;
                frozen_view = view.clone();
                let fake_count = (plan.duration_frames as f64 * plan.rate_multiplier).round() as u64;
                let spacing = (period as f64 / plan.rate_multiplier).round() as u64;
                for j in 0..fake_count {
                    agenda.push(time + eps + j * spacing, Ev::FakeEmit { j });
                }
            }
            Ev::FakeEmit { j } => {
                let plan = attack.expect("attack events only exist with an attack");
                let packets =
                    forge_full_frame(plan, &frozen_view, config.scene.height, period, j)?;
                emit(time, Link::AttackerToAdas, &packets, &mut observer, &mut capture);
            }
            Ev::AttackStart => {
                emit(
                    time,
                    Link::AttackerToCamera,
                    &[StreamPacket::Gvcp(GvcpCommand::acquisition(true))],
                    &mut observer,
                    &mut capture,
                );
                acquiring = true;
            }
        }
    }

    let (frames, width_verdicts) = observer.finish();
    Ok(SessionOutput { capture, frames, width_verdicts, attack_log })
}

/// Recompute frames and width verdicts from a saved capture. Produces exactly
/// what the live run produced, because it is the same consumer.
pub fn replay_capture(capture: &Capture) -> Result<(Vec<FrameRecord>, Vec<WidthVerdict>), SimError> {
    let echo: SessionEcho = serde_json::from_str(&capture.config_json)
        .map_err(|e| SimError::Replay(format!("config echo: {e}")))?;
    let mut observer = SessionObserver::new(
        echo.sim.max_payload,
        echo.defense.as_ref().map(|d| (d.d_max, echo.sim.scene.width)),
    );
    for (i, record) in capture.records.iter().enumerate() {
        observer
            .consume(record)
            .map_err(|e| SimError::Replay(format!("record {i}: {e}")))?;
    }
    Ok(observer.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defense::Verdict;

    fn small_config(seed: u64) -> SimConfig {
        SimConfig {
            fps: 20,
            scene: SceneConfig {
                seed,
                width: 64,
                height: 16,
                motion: (1.0, 0.0),
                texture_scale: 6.0,
                corner_density: 4000.0,
            },
            loss_prob: 0.0,
            camera_delay_frames: 0,
            duration_frames: 10,
            seed,
            record_capture: true,
            max_payload: 500,
        }
    }

    #[test]
    fn clean_run_delivers_every_frame() {
        let out = run_session(&small_config(1), None, None).unwrap();
        assert_eq!(out.frames.len(), 10);
        for (i, f) in out.frames.iter().enumerate() {
            assert_eq!(f.reassembly.leader.block_id, i as u64 + 1);
            assert!(f.reassembly.missing_packet_ids.is_empty());
            assert_eq!(f.leader_link, Link::CameraToAdas);
            if i > 0 {
                let prev = &out.frames[i - 1];
                assert_eq!(
                    f.reassembly.leader.timestamp_ns - prev.reassembly.leader.timestamp_ns,
                    50_000_000
                );
            }
        }
        assert!(out.width_verdicts.is_empty());
        assert!(out.attack_log.is_empty());
    }

    #[test]
    fn determinism_bytewise() {
        let a = run_session(&small_config(7), None, None).unwrap();
        let b = run_session(&small_config(7), None, None).unwrap();
        assert_eq!(a.capture, b.capture);
    }

    #[test]
    fn defense_clean_run_verifies_all_frames() {
        for delay in [0u32, 1] {
            let mut cfg = small_config(3);
            cfg.camera_delay_frames = delay;
            let plan = DefensePlan { key: b"session key".to_vec(), bits_per_frame: 2, d_max: 1 };
            let out = run_session(&cfg, None, Some(&plan)).unwrap();
            assert_eq!(out.width_verdicts.len(), 10);
            for v in &out.width_verdicts {
                assert_eq!(v.verdict, Verdict::Valid, "delay {delay}: {v:?}");
                // The true delay always matches; a fresher window entry can
                // also match when consecutive draws coincide.
                assert!(v.matched_delay.unwrap() <= delay as usize, "delay {delay}: {v:?}");
            }
            if delay == 0 {
                assert!(out.width_verdicts.iter().all(|v| v.matched_delay == Some(0)));
            } else {
                assert!(out.width_verdicts.iter().any(|v| v.matched_delay == Some(1)));
            }
        }
    }

    #[test]
    fn width_request_takes_effect_one_frame_late() {
        let mut cfg = small_config(4);
        cfg.camera_delay_frames = 1;
        let plan = DefensePlan { key: b"delayed".to_vec(), bits_per_frame: 2, d_max: 1 };
        let out = run_session(&cfg, None, Some(&plan)).unwrap();
        // Reconstruct the request sequence from the capture.
        let mut requests = Vec::new();
        for rec in &out.capture.records {
            if rec.link == Link::DefenseToCamera {
                if let StreamPacket::Gvcp(cmd) = decode_packet(&rec.bytes).unwrap() {
                    requests.push(cmd.value);
                }
            }
        }
        assert_eq!(requests.len(), 10);
        assert_eq!(out.frames[0].reassembly.leader.width, 64);
        for k in 1..10 {
            assert_eq!(out.frames[k].reassembly.leader.width, requests[k - 1]);
        }
    }

    #[test]
    fn replay_reproduces_live_results() {
        let mut cfg = small_config(9);
        cfg.loss_prob = 0.05;
        let plan = DefensePlan { key: b"replay me".to_vec(), bits_per_frame: 3, d_max: 1 };
        let out = run_session(&cfg, None, Some(&plan)).unwrap();
        let (frames, verdicts) = replay_capture(&out.capture).unwrap();
        assert_eq!(frames, out.frames);
        assert_eq!(verdicts, out.width_verdicts);
    }

    #[test]
    fn capture_file_round_trip_preserves_replay() {
        let out = run_session(&small_config(11), None, None).unwrap();
        let mut file = Vec::new();
        out.capture.write_to(&mut file).unwrap();
        let cap = Capture::read_from(&file[..]).unwrap();
        assert_eq!(cap, out.capture);
    }

    #[test]
    fn loss_marks_missing_packets() {
        let mut cfg = small_config(13);
        cfg.loss_prob = 0.3;
        cfg.duration_frames = 30;
        let out = run_session(&cfg, None, None).unwrap();
        let missing: usize =
            out.frames.iter().map(|f| f.reassembly.missing_packet_ids.len()).sum();
        assert!(missing > 0, "0.3 loss over 30 frames should drop something");
        // Leaders and trailers always arrive: every frame reassembles.
        assert_eq!(out.frames.len(), 30);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = small_config(1);
        cfg.fps = 0;
        assert!(matches!(run_session(&cfg, None, None), Err(SimError::BadConfig(_))));
        let mut cfg = small_config(1);
        cfg.loss_prob = 1.0;
        assert!(matches!(run_session(&cfg, None, None), Err(SimError::BadConfig(_))));
        let mut cfg = small_config(1);
        cfg.camera_delay_frames = 2;
        assert!(matches!(run_session(&cfg, None, None), Err(SimError::BadConfig(_))));
    }
}
