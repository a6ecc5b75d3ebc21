//! Frame fragmentation and receiver-side reassembly.

use super::{LeaderPacket, PayloadPacket, StreamPacket, TrailerPacket, DEFAULT_MAX_PAYLOAD};
use crate::pixel::PixelBuffer;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReassembleError {
    #[error("packet sequence does not start with a leader")]
    NoLeader,
    #[error("max_payload {0} outside 1..={DEFAULT_MAX_PAYLOAD}")]
    BadMaxPayload(usize),
}

/// What the receiver reconstructed for one block, including everything it
/// noticed going wrong on the way.
#[derive(Clone, Debug, PartialEq)]
pub struct ReassemblyResult {
    pub buffer: PixelBuffer,
    pub leader: LeaderPacket,
    /// Expected packet ids (1..=ceil(w*h/max_payload)) that never arrived;
    /// their byte ranges stay zero.
    pub missing_packet_ids: Vec<u32>,
    /// Packet ids that arrived more than once; the first arrival's bytes won.
    pub overwritten_packet_ids: Vec<u32>,
    /// Payload bytes that fell outside the leader's w*h geometry.
    pub truncated_bytes: usize,
    /// Leader geometry differed from the receiver's configured expectation.
    pub dimension_mismatch: bool,
}

/// Split a frame into leader + payload run + trailer. Packets carry
/// `max_payload` data bytes, except the last which takes the remainder.
pub fn fragment_frame(
    frame: &PixelBuffer,
    block_id: u64,
    timestamp_ns: u64,
    max_payload: usize,
) -> Vec<StreamPacket> {
    assert!(max_payload >= 1 && max_payload <= DEFAULT_MAX_PAYLOAD);
    debug_assert!(frame.ensure_even().is_ok());
    let bytes = frame.bytes();
    let mut packets = Vec::with_capacity(2 + bytes.len() / max_payload);
    packets.push(StreamPacket::Leader(LeaderPacket {
        block_id,
        width: frame.width(),
        height: frame.height(),
        pixel_format: frame.format().wire_code(),
        timestamp_ns,
    }));
    for (i, chunk) in bytes.chunks(max_payload).enumerate() {
        packets.push(StreamPacket::Payload(PayloadPacket {
            block_id,
            packet_id: (i + 1) as u32,
            data: chunk.to_vec(),
        }));
    }
    packets.push(StreamPacket::Trailer(TrailerPacket { block_id }));
    packets
}

/// Rebuild a frame from the packets of one block, in arrival order with the
/// leader first. Payload bytes land at (packet_id - 1) * max_payload; the
/// first arrival of a packet id wins; gaps stay zero-filled. Packets for
/// other blocks and extra leaders/trailers are ignored.
pub fn reassemble(
    packets: &[StreamPacket],
    expected: Option<(u32, u32)>,
    max_payload: usize,
) -> Result<ReassemblyResult, ReassembleError> {
    if max_payload == 0 || max_payload > DEFAULT_MAX_PAYLOAD {
        return Err(ReassembleError::BadMaxPayload(max_payload));
    }
    let leader = match packets.first() {
        Some(StreamPacket::Leader(l)) => *l,
        _ => return Err(ReassembleError::NoLeader),
    };
    let total = leader.width as usize * leader.height as usize;
    let expected_packets = total.div_ceil(max_payload) as u32;
    let mut buffer = vec![0u8; total];
    let mut seen = vec![false; expected_packets as usize + 1];
    let mut extra_seen = Vec::new();
    let mut overwritten = Vec::new();
    let mut truncated = 0usize;

    for packet in &packets[1..] {
        let StreamPacket::Payload(p) = packet else { continue };
        if p.block_id != leader.block_id {
            continue;
        }
        if p.packet_id == 0 {
            continue;
        }
        let duplicate = if (p.packet_id as usize) < seen.len() {
            let d = seen[p.packet_id as usize];
            seen[p.packet_id as usize] = true;
            d
        } else {
            let d = extra_seen.contains(&p.packet_id);
            if !d {
                extra_seen.push(p.packet_id);
            }
            d
        };
        if duplicate {
            if !overwritten.contains(&p.packet_id) {
                overwritten.push(p.packet_id);
            }
            continue;
        }
        let offset = (p.packet_id as usize - 1) * max_payload;
        if offset >= total {
            truncated += p.data.len();
            continue;
        }
        let end = (offset + p.data.len()).min(total);
        buffer[offset..end].copy_from_slice(&p.data[..end - offset]);
        truncated += p.data.len() - (end - offset);
    }

    let missing: Vec<u32> = (1..=expected_packets).filter(|&id| !seen[id as usize]).collect();
    overwritten.sort_unstable();
    let dimension_mismatch = expected.is_some_and(|(w, h)| w != leader.width || h != leader.height);
    let buffer = PixelBuffer::new(leader.width, leader.height, buffer)
        .expect("leader geometry validated at decode");
    Ok(ReassemblyResult {
        buffer,
        leader,
        missing_packet_ids: missing,
        overwritten_packet_ids: overwritten,
        truncated_bytes: truncated,
        dimension_mismatch,
    })
}
