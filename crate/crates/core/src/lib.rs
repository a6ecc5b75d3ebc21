//! Deterministic simulator for a GigE-style in-vehicle camera link.
//!
//! The library models the full chain an attacker on the network path can
//! touch: raw Bayer frames and their synthesis ([`pixel`]), the stream and
//! control packet formats ([`protocol`]), a discrete-event session runner
//! ([`sim`]), frame injection attacks ([`attack`]), passive per-frame anomaly
//! detectors ([`detect`]), a keyed width-hopping defense ([`defense`]), and
//! the closed-form / Monte Carlo analytics that quantify the two sides
//! ([`analytics`]).
//!
//! Everything is seeded: given the same configuration, every byte of every
//! capture, verdict, and report is reproduced exactly.

pub mod analytics;
pub mod attack;
pub mod defense;
pub mod detect;
pub mod pixel;
pub mod protocol;
pub mod sim;

pub use attack::{AttackKind, AttackPlan, AttackerView, InjectionPayload, MetadataPolicy, TimestampPolicy};
pub use defense::{DefensePlan, Verdict, VerifierState, WidthScheduler, WidthVerdict};
pub use detect::{DetectorConfig, DetectorVerdict};
pub use pixel::{PixelBuffer, PixelFormat, RgbImage, SceneConfig, SignLabel, SignTemplate};
pub use protocol::{GvcpCommand, GvcpRegister, LeaderPacket, PayloadPacket, ReassemblyResult, StreamPacket, TrailerPacket};
pub use sim::{Capture, CaptureRecord, FrameRecord, Link, SessionOutput, SimConfig};
