//! Stream and control packet types.
//!
//! A frame travels as one leader packet (metadata), a run of payload packets
//! (raw mosaic bytes in packet-id order), and one trailer. Control writes are
//! single-register GVCP commands. The receiver trusts the leader's geometry —
//! that trust is the attack surface the rest of the crate explores.

mod fragment;
mod wire;

pub use fragment::{fragment_frame, reassemble, ReassembleError, ReassemblyResult};
pub use wire::{decode_packet, encode_packet, ParseError, WIRE_MAGIC};

use serde::{Deserialize, Serialize};

/// Conventional UDP port metadata recorded in captures. The simulator does
/// not open sockets; these only label the capture header.
pub const CONTROL_PORT: u16 = 3956;
pub const STREAM_SOURCE_PORT: u16 = 10010;

/// Largest payload data size a single stream packet may carry.
pub const DEFAULT_MAX_PAYLOAD: usize = 8950;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderPacket {
    pub block_id: u64,
    pub width: u32,
    pub height: u32,
    /// Wire code of the pixel format; the camera always sends 1 (8-bit RGGB).
    pub pixel_format: u32,
    pub timestamp_ns: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadPacket {
    pub block_id: u64,
    /// 1-based position within the block.
    pub packet_id: u32,
    pub data: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrailerPacket {
    pub block_id: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GvcpRegister {
    /// 1 = streaming on, 0 = stopped.
    Acquisition,
    /// Frame width in pixels; takes effect a configurable number of frames
    /// after the write.
    Width,
}

impl GvcpRegister {
    pub const fn wire_code(self) -> u16 {
        match self {
            GvcpRegister::Acquisition => 1,
            GvcpRegister::Width => 2,
        }
    }

    pub fn from_wire_code(code: u16) -> Option<Self> {
        match code {
            1 => Some(GvcpRegister::Acquisition),
            2 => Some(GvcpRegister::Width),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GvcpCommand {
    pub register: GvcpRegister,
    pub value: u32,
}

impl GvcpCommand {
    pub fn acquisition(on: bool) -> Self {
        GvcpCommand { register: GvcpRegister::Acquisition, value: on as u32 }
    }

    pub fn width(width: u32) -> Self {
        GvcpCommand { register: GvcpRegister::Width, value: width }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamPacket {
    Leader(LeaderPacket),
    Payload(PayloadPacket),
    Trailer(TrailerPacket),
    Gvcp(GvcpCommand),
}

impl StreamPacket {
    pub fn block_id(&self) -> Option<u64> {
        match self {
            StreamPacket::Leader(p) => Some(p.block_id),
            StreamPacket::Payload(p) => Some(p.block_id),
            StreamPacket::Trailer(p) => Some(p.block_id),
            StreamPacket::Gvcp(_) => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            StreamPacket::Leader(_) => "leader",
            StreamPacket::Payload(_) => "payload",
            StreamPacket::Trailer(_) => "trailer",
            StreamPacket::Gvcp(_) => "gvcp",
        }
    }
}
