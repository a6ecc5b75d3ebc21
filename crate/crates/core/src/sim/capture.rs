//! Capture files: every byte that crossed any link, timestamped, replayable.

use crate::protocol::{decode_packet, ParseError, StreamPacket};
use std::io::{self, Read, Write};
use thiserror::Error;

pub const CAPTURE_MAGIC: &[u8; 4] = b"GVSC";
pub const CAPTURE_VERSION: u16 = 1;

/// Which wire a record was observed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Link {
    CameraToAdas,
    DefenseToCamera,
    AttackerToAdas,
    AttackerToCamera,
}

impl Link {
    pub fn wire_code(self) -> u8 {
        match self {
            Link::CameraToAdas => 1,
            Link::DefenseToCamera => 2,
            Link::AttackerToAdas => 3,
            Link::AttackerToCamera => 4,
        }
    }

    pub fn from_wire_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => Link::CameraToAdas,
            2 => Link::DefenseToCamera,
            3 => Link::AttackerToAdas,
            4 => Link::AttackerToCamera,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::CameraToAdas => "camera_to_adas",
            Link::DefenseToCamera => "defense_to_camera",
            Link::AttackerToAdas => "attacker_to_adas",
            Link::AttackerToCamera => "attacker_to_camera",
        }
    }
}

/// One packet on one link at one simulated instant. Records are kept in
/// emission order; ties in time preserve insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaptureRecord {
    pub time_ns: u64,
    pub link: Link,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("bad capture magic")]
    BadMagic,
    #[error("unsupported capture version {0}")]
    BadVersion(u16),
    #[error("record {index}: {source}")]
    BadRecord { index: usize, source: ParseError },
    #[error("unknown link code {0}")]
    BadLink(u8),
    #[error("config blob is not valid UTF-8")]
    BadConfig,
}

/// A complete session transcript: the configuration that produced it and the
/// ordered records. Replaying the records through the same receiver code
/// reproduces every downstream verdict.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Capture {
    /// JSON echo of the effective configuration (secrets excluded).
    pub config_json: String,
    pub records: Vec<CaptureRecord>,
}

impl Capture {
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(CAPTURE_MAGIC)?;
        w.write_all(&CAPTURE_VERSION.to_be_bytes())?;
        let cfg = self.config_json.as_bytes();
        w.write_all(&(cfg.len() as u32).to_be_bytes())?;
        w.write_all(cfg)?;
        for rec in &self.records {
            w.write_all(&rec.time_ns.to_be_bytes())?;
            w.write_all(&[rec.link.wire_code()])?;
            w.write_all(&(rec.bytes.len() as u32).to_be_bytes())?;
            w.write_all(&rec.bytes)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, CaptureError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CAPTURE_MAGIC {
            return Err(CaptureError::BadMagic);
        }
        let mut v = [0u8; 2];
        r.read_exact(&mut v)?;
        let version = u16::from_be_bytes(v);
        if version != CAPTURE_VERSION {
            return Err(CaptureError::BadVersion(version));
        }
        let mut len4 = [0u8; 4];
        r.read_exact(&mut len4)?;
        let mut cfg = vec![0u8; u32::from_be_bytes(len4) as usize];
        r.read_exact(&mut cfg)?;
        let config_json = String::from_utf8(cfg).map_err(|_| CaptureError::BadConfig)?;

        let mut records = Vec::new();
        loop {
            let mut t8 = [0u8; 8];
            match r.read_exact(&mut t8) {
                Ok(()) => {}
                Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            }
            let time_ns = u64::from_be_bytes(t8);
            let mut l1 = [0u8; 1];
            r.read_exact(&mut l1)?;
            let link = Link::from_wire_code(l1[0]).ok_or(CaptureError::BadLink(l1[0]))?;
            r.read_exact(&mut len4)?;
            let mut bytes = vec![0u8; u32::from_be_bytes(len4) as usize];
            r.read_exact(&mut bytes)?;
            records.push(CaptureRecord { time_ns, link, bytes });
        }
        Ok(Self { config_json, records })
    }

    /// Human-readable listing: time, link, packet type, ids, size.
    pub fn export_csv<W: Write>(&self, mut w: W) -> Result<(), CaptureError> {
        writeln!(w, "time_ns,link,type,block_id,packet_id,size")?;
        for (index, rec) in self.records.iter().enumerate() {
            let packet = decode_packet(&rec.bytes)
                .map_err(|source| CaptureError::BadRecord { index, source })?;
            let (block, pid) = match &packet {
                StreamPacket::Leader(l) => (l.block_id.to_string(), String::new()),
                StreamPacket::Payload(p) => (p.block_id.to_string(), p.packet_id.to_string()),
                StreamPacket::Trailer(t) => (t.block_id.to_string(), String::new()),
                StreamPacket::Gvcp(_) => (String::new(), String::new()),
            };
            writeln!(
                w,
                "{},{},{},{},{},{}",
                rec.time_ns,
                rec.link.name(),
                packet.kind_name(),
                block,
                pid,
                rec.bytes.len()
            )?;
        }
        Ok(())
    }
}
