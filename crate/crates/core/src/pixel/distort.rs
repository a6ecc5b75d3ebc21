//! Width reinterpretation: what a receiver sees when payload bytes laid out at
//! one row width are sliced at another.

use super::{PixelBuffer, PixelError};

/// Re-slice a row-major payload at `dst_width`. The byte stream is untouched;
/// only the row boundaries move, so content drifts sideways by
/// (src_width - dst_width) pixels per row and any trailing partial row is
/// dropped. `src_width` is the layout the bytes were produced at and is only
/// validated against, never used to transform.
pub fn reinterpret_width(payload: &[u8], src_width: u32, dst_width: u32) -> Result<PixelBuffer, PixelError> {
    if src_width == 0 || src_width % 2 != 0 {
        return Err(PixelError::OddDimension { width: src_width, height: 0 });
    }
    if dst_width == 0 || dst_width % 2 != 0 {
        return Err(PixelError::OddDimension { width: dst_width, height: 0 });
    }
    if payload.len() % src_width as usize != 0 {
        return Err(PixelError::RaggedPayload { len: payload.len(), width: src_width });
    }
    let height = payload.len() / dst_width as usize;
    if height == 0 {
        return Err(PixelError::PayloadTooShort { len: payload.len(), width: dst_width });
    }
    let kept = height * dst_width as usize;
    PixelBuffer::new(dst_width, height as u32, payload[..kept].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_when_widths_match() {
        let payload: Vec<u8> = (0..48).collect();
        let out = reinterpret_width(&payload, 8, 8).unwrap();
        assert_eq!(out.width(), 8);
        assert_eq!(out.height(), 6);
        assert_eq!(out.bytes(), &payload[..]);
    }

    #[test]
    fn narrower_slice_shifts_rows() {
        // 48 bytes laid out at width 8, sliced at width 6: row r starts at
        // byte r*6, so output row 1 is bytes 6..12.
        let payload: Vec<u8> = (0..48).collect();
        let out = reinterpret_width(&payload, 8, 6).unwrap();
        assert_eq!(out.height(), 8);
        let row1: Vec<u8> = (0..6).map(|c| out.byte(1, c)).collect();
        assert_eq!(row1, vec![6, 7, 8, 9, 10, 11]);
        let row7: Vec<u8> = (0..6).map(|c| out.byte(7, c)).collect();
        assert_eq!(row7, vec![42, 43, 44, 45, 46, 47]);
    }

    #[test]
    fn partial_trailing_row_dropped() {
        // 32 bytes at dst width 6 -> 5 full rows, 2 bytes dropped.
        let payload: Vec<u8> = (0..32).collect();
        let out = reinterpret_width(&payload, 4, 6).unwrap();
        assert_eq!(out.height(), 5);
        assert_eq!(out.bytes().len(), 30);
    }

    #[test]
    fn too_short_payload_rejected() {
        let payload = vec![0u8; 4];
        assert_eq!(
            reinterpret_width(&payload, 4, 6),
            Err(PixelError::PayloadTooShort { len: 4, width: 6 })
        );
    }

    #[test]
    fn ragged_payload_rejected() {
        let payload = vec![0u8; 30];
        assert_eq!(
            reinterpret_width(&payload, 8, 6),
            Err(PixelError::RaggedPayload { len: 30, width: 8 })
        );
    }

    #[test]
    fn marker_displacement_follows_row_count() {
        // A marker byte at (r, c) in the source layout lands at linear index
        // r*src + c; at dst width that is row (r*src + c) / dst. The sideways
        // drift per row equals src - dst.
        let src = 10u32;
        let dst = 8u32;
        let mut payload = vec![0u8; 100];
        let (r, c) = (7usize, 3usize);
        payload[r * src as usize + c] = 255;
        let out = reinterpret_width(&payload, src, dst).unwrap();
        let idx = r * src as usize + c;
        let (nr, nc) = (idx / dst as usize, idx % dst as usize);
        assert_eq!(out.byte(nr as u32, nc as u32), 255);
        assert_eq!(nr, 9);
        assert_eq!(nc, 1);
    }
}
