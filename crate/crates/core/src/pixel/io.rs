//! Raw frame file format: "PXB1" magic, width/height/format as big-endian
//! u32, then the mosaic bytes.

use std::io::{self, Read, Write};

use thiserror::Error;

use super::{PixelBuffer, PixelFormat};

pub const PXB_MAGIC: [u8; 4] = *b"PXB1";

#[derive(Debug, Error)]
pub enum PxbError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unknown pixel format code {0}")]
    UnknownFormat(u32),
    #[error("invalid dimensions {width}x{height}")]
    BadDimensions { width: u32, height: u32 },
}

pub fn write_pxb<W: Write>(buf: &PixelBuffer, mut w: W) -> Result<(), PxbError> {
    w.write_all(&PXB_MAGIC)?;
    w.write_all(&buf.width().to_be_bytes())?;
    w.write_all(&buf.height().to_be_bytes())?;
    w.write_all(&buf.format().wire_code().to_be_bytes())?;
    w.write_all(buf.bytes())?;
    Ok(())
}

pub fn read_pxb<R: Read>(mut r: R) -> Result<PixelBuffer, PxbError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != PXB_MAGIC {
        return Err(PxbError::BadMagic(magic));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let width = u32::from_be_bytes(word);
    r.read_exact(&mut word)?;
    let height = u32::from_be_bytes(word);
    r.read_exact(&mut word)?;
    let code = u32::from_be_bytes(word);
    if PixelFormat::from_wire_code(code).is_none() {
        return Err(PxbError::UnknownFormat(code));
    }
    let len = (width as usize).checked_mul(height as usize).ok_or(PxbError::BadDimensions { width, height })?;
    let mut bytes = vec![0u8; len];
    r.read_exact(&mut bytes)?;
    PixelBuffer::new(width, height, bytes).map_err(|_| PxbError::BadDimensions { width, height })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let buf = PixelBuffer::new(6, 4, (0..24).collect()).unwrap();
        let mut file = Vec::new();
        write_pxb(&buf, &mut file).unwrap();
        assert_eq!(&file[..4], b"PXB1");
        assert_eq!(file.len(), 4 + 12 + 24);
        let back = read_pxb(&file[..]).unwrap();
        assert_eq!(back, buf);
    }

    #[test]
    fn bad_magic_rejected() {
        let buf = PixelBuffer::filled(2, 2, 0).unwrap();
        let mut file = Vec::new();
        write_pxb(&buf, &mut file).unwrap();
        file[0] = b'Q';
        assert!(matches!(read_pxb(&file[..]), Err(PxbError::BadMagic(_))));
    }

    #[test]
    fn truncated_body_rejected() {
        let buf = PixelBuffer::filled(4, 4, 9).unwrap();
        let mut file = Vec::new();
        write_pxb(&buf, &mut file).unwrap();
        file.truncate(file.len() - 3);
        assert!(matches!(read_pxb(&file[..]), Err(PxbError::Io(_))));
    }
}
