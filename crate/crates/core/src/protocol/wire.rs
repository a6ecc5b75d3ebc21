//! Canonical binary encoding. Big-endian throughout.
//!
//! Layout: magic 0x47 0x56, one type byte (1 leader, 2 payload, 3 trailer,
//! 4 gvcp), then the type's fields:
//!   leader   block_id u64, width u32, height u32, pixel_format u32, timestamp_ns u64
//!   payload  block_id u64, packet_id u32, data_len u32, data
//!   trailer  block_id u64
//!   gvcp     register u16, value u32
//! Decoding is strict: every byte must be accounted for, and invalid field
//! values (odd frame geometry, unknown codes) are rejected rather than
//! propagated.

use thiserror::Error;

use super::{GvcpCommand, GvcpRegister, LeaderPacket, PayloadPacket, StreamPacket, TrailerPacket, DEFAULT_MAX_PAYLOAD};
use crate::pixel::PixelFormat;

pub const WIRE_MAGIC: [u8; 2] = [0x47, 0x56];

const TYPE_LEADER: u8 = 1;
const TYPE_PAYLOAD: u8 = 2;
const TYPE_TRAILER: u8 = 3;
const TYPE_GVCP: u8 = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unknown packet type {0}")]
    UnknownType(u8),
    #[error("unknown gvcp register {0}")]
    UnknownRegister(u16),
    #[error("unknown pixel format code {0}")]
    UnknownPixelFormat(u32),
    #[error("truncated packet: missing {field}")]
    Truncated { field: &'static str },
    #[error("{actual} trailing bytes after {kind} packet")]
    TrailingBytes { kind: &'static str, actual: usize },
    #[error("payload declares {declared} data bytes but carries {actual}")]
    PayloadLength { declared: u32, actual: usize },
    #[error("payload data length {0} outside 1..={DEFAULT_MAX_PAYLOAD}")]
    PayloadSize(usize),
    #[error("leader geometry {width}x{height} must be even and positive")]
    BadGeometry { width: u32, height: u32 },
    #[error("acquisition value {0} must be 0 or 1")]
    BadAcquisition(u32),
    #[error("width value {0} must be even and positive")]
    BadWidthValue(u32),
}

pub fn encode_packet(packet: &StreamPacket) -> Vec<u8> {
    let mut out = Vec::with_capacity(32);
    out.extend_from_slice(&WIRE_MAGIC);
    match packet {
        StreamPacket::Leader(p) => {
            debug_assert!(p.width % 2 == 0 && p.height % 2 == 0 && p.width > 0 && p.height > 0);
            out.push(TYPE_LEADER);
            out.extend_from_slice(&p.block_id.to_be_bytes());
            out.extend_from_slice(&p.width.to_be_bytes());
            out.extend_from_slice(&p.height.to_be_bytes());
            out.extend_from_slice(&p.pixel_format.to_be_bytes());
            out.extend_from_slice(&p.timestamp_ns.to_be_bytes());
        }
        StreamPacket::Payload(p) => {
            debug_assert!(!p.data.is_empty() && p.data.len() <= DEFAULT_MAX_PAYLOAD);
            out.push(TYPE_PAYLOAD);
            out.extend_from_slice(&p.block_id.to_be_bytes());
            out.extend_from_slice(&p.packet_id.to_be_bytes());
            out.extend_from_slice(&(p.data.len() as u32).to_be_bytes());
            out.extend_from_slice(&p.data);
        }
        StreamPacket::Trailer(p) => {
            out.push(TYPE_TRAILER);
            out.extend_from_slice(&p.block_id.to_be_bytes());
        }
        StreamPacket::Gvcp(p) => {
            out.push(TYPE_GVCP);
            out.extend_from_slice(&p.register.wire_code().to_be_bytes());
            out.extend_from_slice(&p.value.to_be_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self, field: &'static str) -> Result<[u8; N], ParseError> {
        if self.pos + N > self.buf.len() {
            return Err(ParseError::Truncated { field });
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.buf[self.pos..self.pos + N]);
        self.pos += N;
        Ok(out)
    }

    fn take_u8(&mut self, field: &'static str) -> Result<u8, ParseError> {
        Ok(self.take::<1>(field)?[0])
    }

    fn take_u16(&mut self, field: &'static str) -> Result<u16, ParseError> {
        Ok(u16::from_be_bytes(self.take::<2>(field)?))
    }

    fn take_u32(&mut self, field: &'static str) -> Result<u32, ParseError> {
        Ok(u32::from_be_bytes(self.take::<4>(field)?))
    }

    fn take_u64(&mut self, field: &'static str) -> Result<u64, ParseError> {
        Ok(u64::from_be_bytes(self.take::<8>(field)?))
    }

    fn finish(&self, kind: &'static str) -> Result<(), ParseError> {
        let rest = self.buf.len() - self.pos;
        if rest != 0 {
            return Err(ParseError::TrailingBytes { kind, actual: rest });
        }
        Ok(())
    }
}

pub fn decode_packet(bytes: &[u8]) -> Result<StreamPacket, ParseError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take::<2>("magic")?;
    if magic != WIRE_MAGIC {
        return Err(ParseError::BadMagic(magic));
    }
    let ty = r.take_u8("type")?;
    match ty {
        TYPE_LEADER => {
            let block_id = r.take_u64("block_id")?;
            let width = r.take_u32("width")?;
            let height = r.take_u32("height")?;
            let pixel_format = r.take_u32("pixel_format")?;
            let timestamp_ns = r.take_u64("timestamp_ns")?;
            r.finish("leader")?;
            if width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0 {
                return Err(ParseError::BadGeometry { width, height });
            }
            if PixelFormat::from_wire_code(pixel_format).is_none() {
                return Err(ParseError::UnknownPixelFormat(pixel_format));
            }
            Ok(StreamPacket::Leader(LeaderPacket { block_id, width, height, pixel_format, timestamp_ns }))
        }
        TYPE_PAYLOAD => {
            let block_id = r.take_u64("block_id")?;
            let packet_id = r.take_u32("packet_id")?;
            let declared = r.take_u32("data_len")?;
            let actual = bytes.len().saturating_sub(r.pos);
            if declared as usize != actual {
                return Err(ParseError::PayloadLength { declared, actual });
            }
            if actual == 0 || actual > DEFAULT_MAX_PAYLOAD {
                return Err(ParseError::PayloadSize(actual));
            }
            let data = bytes[r.pos..].to_vec();
            Ok(StreamPacket::Payload(PayloadPacket { block_id, packet_id, data }))
        }
        TYPE_TRAILER => {
            let block_id = r.take_u64("block_id")?;
            r.finish("trailer")?;
            Ok(StreamPacket::Trailer(TrailerPacket { block_id }))
        }
        TYPE_GVCP => {
            let code = r.take_u16("register")?;
            let value = r.take_u32("value")?;
            r.finish("gvcp")?;
            let register = GvcpRegister::from_wire_code(code).ok_or(ParseError::UnknownRegister(code))?;
            match register {
                GvcpRegister::Acquisition if value > 1 => return Err(ParseError::BadAcquisition(value)),
                GvcpRegister::Width if value == 0 || value % 2 != 0 => {
                    return Err(ParseError::BadWidthValue(value))
                }
                _ => {}
            }
            Ok(StreamPacket::Gvcp(GvcpCommand { register, value }))
        }
        other => Err(ParseError::UnknownType(other)),
    }
}
