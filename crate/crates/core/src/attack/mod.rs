//! The three injection attacks, as pure packet forgers.
//!
//! Each forge function maps (plan, what the attacker has seen) to the packets
//! it would put on the wire. The attacker taps the camera-to-receiver link
//! only: it sees completed previous frames, never the in-flight frame and
//! never the control channel. The simulator owns timing; these functions own
//! content.

use crate::pixel::{
    demosaic, make_template, mosaic, mosaic_region, render_on_background, PixelBuffer, PixelError,
    RgbImage, SignLabel,
};
use crate::protocol::{fragment_frame, LeaderPacket, PayloadPacket, StreamPacket};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Stop the camera, stream whole fabricated frames, restart it.
    FullFrame,
    /// Race the camera's first payload packets of a frame it still owns.
    Stripe,
    /// Stripe built from the previous frame with a small patch embedded.
    Patch,
}

/// How forged leaders pick block ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetadataPolicy {
    /// Ids fixed ahead of time from `block_id_base`.
    Static,
    /// Ids continue from the last sniffed camera leader.
    SniffAdaptive,
}

/// How forged leaders pick timestamps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampPolicy {
    /// Timestamps restart at zero, advancing one nominal period per fake.
    FromZero,
    /// Timestamps continue from the last sniffed leader, one nominal period
    /// per fake regardless of the actual send rate.
    NominalAdvance,
}

/// Injected content: either a ready raw frame or a sign description rendered
/// at forge time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionPayload {
    Frame(PixelBuffer),
    Template { label: SignLabel, width: u32, height: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackPlan {
    pub kind: AttackKind,
    /// First attacked frame slot (0-based).
    pub start_frame: u64,
    /// Number of consecutive attacked slots.
    pub duration_frames: u64,
    pub payload: InjectionPayload,
    /// Width the attacker lays its content out at (its guess of the frame
    /// width). Unused by Patch, which reuses the previous frame's width.
    pub injected_width: u32,
    /// Rows forged at the top of the frame (Stripe and Patch).
    pub stripe_rows: u32,
    /// Patch placement inside the stripe: (row, col).
    pub patch_position: (u32, u32),
    pub metadata_policy: MetadataPolicy,
    pub timestamp_policy: TimestampPolicy,
    /// Fakes per slot for FullFrame: 2.0 sends twice as fast as the camera.
    pub rate_multiplier: f64,
    /// First forged block id under MetadataPolicy::Static.
    pub block_id_base: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum AttackPlanError {
    #[error("injected_width {0} must be even and positive")]
    BadInjectedWidth(u32),
    #[error("stripe_rows {rows} must be even, positive, and at most the frame height {height}")]
    BadStripeRows { rows: u32, height: u32 },
    #[error("patch at {at:?} with size {size:?} does not fit the {rows}x{width} stripe")]
    PatchOutsideStripe { at: (u32, u32), size: (u32, u32), rows: u32, width: u32 },
    #[error("attack slots {start}..{end} exceed session duration {duration}")]
    BeyondSession { start: u64, end: u64, duration: u64 },
    #[error("rate_multiplier {0} must be positive and finite")]
    BadRate(f64),
    #[error("payload frame is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    PayloadSize { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error(transparent)]
    Pixel(#[from] PixelError),
}

impl AttackPlan {
    /// Validate against the session it will run in.
    pub fn validate(&self, frame_height: u32, duration_frames: u64) -> Result<(), AttackPlanError> {
        if self.injected_width == 0 || self.injected_width % 2 != 0 {
            return Err(AttackPlanError::BadInjectedWidth(self.injected_width));
        }
        if !(self.rate_multiplier > 0.0) || !self.rate_multiplier.is_finite() {
            return Err(AttackPlanError::BadRate(self.rate_multiplier));
        }
        let end = self.start_frame + self.duration_frames;
        if end > duration_frames {
            return Err(AttackPlanError::BeyondSession {
                start: self.start_frame,
                end,
                duration: duration_frames,
            });
        }
        match self.kind {
            AttackKind::FullFrame => {
                if let InjectionPayload::Frame(buf) = &self.payload {
                    if buf.width() != self.injected_width || buf.height() != frame_height {
                        return Err(AttackPlanError::PayloadSize {
                            got_w: buf.width(),
                            got_h: buf.height(),
                            want_w: self.injected_width,
                            want_h: frame_height,
                        });
                    }
                }
            }
            AttackKind::Stripe | AttackKind::Patch => {
                if self.stripe_rows == 0
                    || self.stripe_rows % 2 != 0
                    || self.stripe_rows > frame_height
                {
                    return Err(AttackPlanError::BadStripeRows {
                        rows: self.stripe_rows,
                        height: frame_height,
                    });
                }
                if self.kind == AttackKind::Patch {
                    let (pw, ph) = self.payload_dims();
                    let (pr, pc) = self.patch_position;
                    if pr + ph > self.stripe_rows || pc + pw > self.injected_width {
                        return Err(AttackPlanError::PatchOutsideStripe {
                            at: self.patch_position,
                            size: (pw, ph),
                            rows: self.stripe_rows,
                            width: self.injected_width,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn payload_dims(&self) -> (u32, u32) {
        match &self.payload {
            InjectionPayload::Frame(buf) => (buf.width(), buf.height()),
            InjectionPayload::Template { width, height, .. } => (*width, *height),
        }
    }

    /// The payload as a full frame image at (width, height): templates render
    /// centered on a plain backdrop, ready frames pass through.
    pub fn payload_image(&self, width: u32, height: u32) -> Result<RgbImage, AttackPlanError> {
        match &self.payload {
            InjectionPayload::Frame(buf) => Ok(demosaic(buf)?),
            InjectionPayload::Template { label, width: tw, height: th } => {
                let tpl = make_template(*label, *tw, *th)?;
                // Even offsets keep the template on the phase it was made for.
                let row = ((height.saturating_sub(*th)) / 4) * 2;
                let col = ((width.saturating_sub(*tw)) / 4) * 2;
                Ok(render_on_background(&tpl, width, height, row, col)?)
            }
        }
    }

    /// The payload as a small image at its own size (patch content).
    fn payload_patch(&self) -> Result<RgbImage, AttackPlanError> {
        match &self.payload {
            InjectionPayload::Frame(buf) => Ok(demosaic(buf)?),
            InjectionPayload::Template { label, width, height } => {
                Ok(make_template(*label, *width, *height)?.image)
            }
        }
    }
}

/// Everything the tap has shown the attacker: the previous completed frame.
/// Never the in-flight frame, never control traffic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttackerView {
    pub last_seen_leader: Option<LeaderPacket>,
    /// Previous frame's payload bytes as reassembled off the tapped link
    /// (lost packets show as zero runs, exactly as the receiver saw them).
    pub last_frame_bytes: Option<Vec<u8>>,
}

/// One complete fabricated frame for FullFrame fake number `j` (0-based).
pub fn forge_full_frame(
    plan: &AttackPlan,
    view: &AttackerView,
    frame_height: u32,
    period_ns: u64,
    j: u64,
) -> Result<Vec<StreamPacket>, AttackPlanError> {
    let image = plan.payload_image(plan.injected_width, frame_height)?;
    let raw = mosaic(&image)?;
    let block_id = match plan.metadata_policy {
        MetadataPolicy::Static => plan.block_id_base + j,
        MetadataPolicy::SniffAdaptive => {
            view.last_seen_leader.map_or(plan.block_id_base, |l| l.block_id) + 1 + j
        }
    };
    let timestamp_ns = match plan.timestamp_policy {
        TimestampPolicy::FromZero => j * period_ns,
        TimestampPolicy::NominalAdvance => {
            view.last_seen_leader.map_or(0, |l| l.timestamp_ns) + (j + 1) * period_ns
        }
    };
    Ok(fragment_frame(&raw, block_id, timestamp_ns, crate::protocol::DEFAULT_MAX_PAYLOAD))
}

fn race_payloads(content: &[u8], rows: u32, width: u32, block_id: u64, max_payload: usize) -> Vec<StreamPacket> {
    let stripe_bytes = rows as usize * width as usize;
    let k = stripe_bytes.div_ceil(max_payload);
    // Every forged packet carries a full max_payload: the last one is padded
    // with the bytes that follow the stripe in the attacker's layout, so its
    // length matches what the receiver expects of a non-final packet.
    let total = k * max_payload;
    let mut data = content[..content.len().min(total)].to_vec();
    data.resize(total, 0);
    data.chunks(max_payload)
        .enumerate()
        .map(|(i, chunk)| {
            StreamPacket::Payload(PayloadPacket {
                block_id,
                packet_id: (i + 1) as u32,
                data: chunk.to_vec(),
            })
        })
        .collect()
}

/// Forge the payload packets that race the camera for the top of its next
/// frame. No leader, no trailer, no control traffic: the camera's own leader
/// keeps its width, which is what lets re-slicing distort the content.
pub fn forge_stripe(
    plan: &AttackPlan,
    view: &AttackerView,
    frame_height: u32,
    max_payload: usize,
) -> Result<Vec<StreamPacket>, AttackPlanError> {
    let image = plan.payload_image(plan.injected_width, frame_height)?;
    let raw = mosaic(&image)?;
    let block_id = view.last_seen_leader.map_or(1, |l| l.block_id + 1);
    Ok(race_payloads(raw.bytes(), plan.stripe_rows, plan.injected_width, block_id, max_payload))
}

/// Outcome of attempting a patch forge for one slot.
pub enum PatchForge {
    Packets(Vec<StreamPacket>),
    /// Nothing seen yet, or the patch cannot fit the seen frame; skipped.
    Skipped(String),
}

/// Stripe assembled from the previous frame at that frame's own width, with
/// the patch sampled onto the matching mosaic phase at `patch_position`.
pub fn forge_patch(
    plan: &AttackPlan,
    view: &AttackerView,
    max_payload: usize,
) -> Result<PatchForge, AttackPlanError> {
    let (Some(leader), Some(bytes)) = (&view.last_seen_leader, &view.last_frame_bytes) else {
        return Ok(PatchForge::Skipped("no previous frame seen".into()));
    };
    let prev_w = leader.width;
    let prev_h = leader.height;
    let patch = plan.payload_patch()?;
    let (pr, pc) = plan.patch_position;
    if plan.stripe_rows > prev_h || pr + patch.height() > plan.stripe_rows || pc + patch.width() > prev_w {
        return Ok(PatchForge::Skipped(format!(
            "patch {}x{} at ({pr},{pc}) does not fit seen frame {prev_w}x{prev_h}",
            patch.width(),
            patch.height(),
        )));
    }

    let mut content = bytes.clone();
    let patch_bytes = mosaic_region(&patch, pr, pc);
    for r in 0..patch.height() as usize {
        let dst = (pr as usize + r) * prev_w as usize + pc as usize;
        let src = r * patch.width() as usize;
        content[dst..dst + patch.width() as usize]
            .copy_from_slice(&patch_bytes[src..src + patch.width() as usize]);
    }
    let block_id = leader.block_id + 1;
    Ok(PatchForge::Packets(race_payloads(
        &content,
        plan.stripe_rows,
        prev_w,
        block_id,
        max_payload,
    )))
}
