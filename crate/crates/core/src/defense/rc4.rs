//! RC4 keystream generator used to schedule frame widths.
//!
//! Only the keystream is needed here (nothing is encrypted), and the first
//! 1000 output bytes are discarded before use to skip the biased prefix.

use thiserror::Error;

/// Output bytes discarded after key setup before the stream is used.
pub const KEYSTREAM_DROP: usize = 1000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KeyError {
    #[error("key length {0} outside 1..=256")]
    BadLength(usize),
}

/// Classic RC4 state machine: 256-byte permutation plus two indices.
#[derive(Clone)]
pub struct Rc4 {
    s: [u8; 256],
    i: u8,
    j: u8,
}

impl Rc4 {
    /// Key-schedule the permutation. No bytes are dropped; callers that want
    /// the production stream use [`Rc4::with_drop`].
    pub fn new(key: &[u8]) -> Result<Self, KeyError> {
        if key.is_empty() || key.len() > 256 {
            return Err(KeyError::BadLength(key.len()));
        }
        let mut s = [0u8; 256];
        for (i, v) in s.iter_mut().enumerate() {
            *v = i as u8;
        }
        let mut j = 0u8;
        for i in 0..256 {
            j = j
                .wrapping_add(s[i])
                .wrapping_add(key[i % key.len()]);
            s.swap(i, j as usize);
        }
        Ok(Self { s, i: 0, j: 0 })
    }

    /// Key-schedule and discard the first `drop` output bytes.
    pub fn with_drop(key: &[u8], drop: usize) -> Result<Self, KeyError> {
        let mut rc4 = Self::new(key)?;
        for _ in 0..drop {
            rc4.next_byte();
        }
        Ok(rc4)
    }

    /// One PRGA step.
    pub fn next_byte(&mut self) -> u8 {
        self.i = self.i.wrapping_add(1);
        self.j = self.j.wrapping_add(self.s[self.i as usize]);
        self.s.swap(self.i as usize, self.j as usize);
        let t = self.s[self.i as usize].wrapping_add(self.s[self.j as usize]);
        self.s[t as usize]
    }

    /// Next `n` keystream bytes.
    pub fn keystream(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.next_byte()).collect()
    }
}

impl std::fmt::Debug for Rc4 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // The permutation is key material; keep it out of logs.
        f.debug_struct("Rc4").finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_stream_for_key_named_key() {
        let mut rc4 = Rc4::new(b"Key").unwrap();
        assert_eq!(
            rc4.keystream(10),
            [0xEB, 0x9F, 0x77, 0x81, 0xB7, 0x34, 0xCA, 0x72, 0xA7, 0x19]
        );
    }

    #[test]
    fn dropped_stream_is_a_pure_offset() {
        let mut raw = Rc4::new(b"Key").unwrap();
        let prefix = raw.keystream(1004);
        let mut dropped = Rc4::with_drop(b"Key", KEYSTREAM_DROP).unwrap();
        assert_eq!(dropped.keystream(4), prefix[1000..1004]);
        assert_eq!(&prefix[1000..1004], [0x71, 0xA5, 0x4B, 0xE2]);
    }

    #[test]
    fn same_key_same_stream() {
        let mut a = Rc4::with_drop(b"secret", KEYSTREAM_DROP).unwrap();
        let mut b = Rc4::with_drop(b"secret", KEYSTREAM_DROP).unwrap();
        assert_eq!(a.keystream(64), b.keystream(64));
    }

    #[test]
    fn key_length_bounds() {
        assert_eq!(Rc4::new(&[]).unwrap_err(), KeyError::BadLength(0));
        assert_eq!(Rc4::new(&[0u8; 257]).unwrap_err(), KeyError::BadLength(257));
        assert!(Rc4::new(&[0u8; 256]).is_ok());
    }
}
