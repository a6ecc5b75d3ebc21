//! Width-varying active defense.
//!
//! A defense unit sitting between receiver and camera requests a new frame
//! width before every frame, drawn from a keyed RC4 stream, and checks that
//! each received frame's width matches one of the recently requested values.
//! An injector that cannot observe the control channel has to guess the
//! width; a wrong guess marks the frame Invalid.

mod rc4;

pub use rc4::{KeyError, Rc4, KEYSTREAM_DROP};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DefenseError {
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("bits_per_frame {0} outside 1..=8")]
    BadBits(u8),
    #[error("w_max {w_max} cannot host {symbols} widths in even steps")]
    BadWidthRange { w_max: u32, symbols: u32 },
}

/// Defense parameters carried in a scenario config.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefensePlan {
    /// RC4 key held by the defense unit. Never transmitted.
    pub key: Vec<u8>,
    /// Bits consumed per frame; the symbol alphabet has 2^b widths.
    pub bits_per_frame: u8,
    /// Verification window covers delays 0..=d_max.
    pub d_max: usize,
}

impl DefensePlan {
    pub fn symbol_count(&self) -> u32 {
        1u32 << self.bits_per_frame
    }
}

enum ByteSource {
    Stream(Rc4),
    /// Fixed byte sequence, cycled. Diagnostic constructor only.
    Fixed { bytes: Vec<u8>, pos: usize },
}

/// Emits the width schedule: b keystream bits per frame, MSB-first within
/// each byte, symbol k maps to width w_max - 2k.
pub struct WidthScheduler {
    source: ByteSource,
    bits_per_frame: u8,
    w_max: u32,
    current: u8,
    bits_left: u8,
    bit_cursor: u64,
}

impl WidthScheduler {
    pub fn new(key: &[u8], bits_per_frame: u8, w_max: u32) -> Result<Self, DefenseError> {
        let rc4 = Rc4::with_drop(key, KEYSTREAM_DROP)?;
        Self::with_source(ByteSource::Stream(rc4), bits_per_frame, w_max)
    }

    /// Schedule over an explicit byte sequence instead of RC4, cycling when
    /// exhausted. For tests and offline schedule inspection.
    pub fn from_bytes(bytes: &[u8], bits_per_frame: u8, w_max: u32) -> Result<Self, DefenseError> {
        assert!(!bytes.is_empty());
        Self::with_source(
            ByteSource::Fixed { bytes: bytes.to_vec(), pos: 0 },
            bits_per_frame,
            w_max,
        )
    }

    fn with_source(source: ByteSource, bits_per_frame: u8, w_max: u32) -> Result<Self, DefenseError> {
        if bits_per_frame == 0 || bits_per_frame > 8 {
            return Err(DefenseError::BadBits(bits_per_frame));
        }
        let symbols = 1u32 << bits_per_frame;
        // Smallest symbol width w_max - 2(symbols-1) must stay positive,
        // and widths step by 2 so w_max must be even.
        if w_max % 2 != 0 || w_max <= 2 * (symbols - 1) {
            return Err(DefenseError::BadWidthRange { w_max, symbols });
        }
        Ok(Self {
            source,
            bits_per_frame,
            w_max,
            current: 0,
            bits_left: 0,
            bit_cursor: 0,
        })
    }

    pub fn w_max(&self) -> u32 {
        self.w_max
    }

    pub fn bits_per_frame(&self) -> u8 {
        self.bits_per_frame
    }

    /// Total keystream bits consumed so far.
    pub fn bit_cursor(&self) -> u64 {
        self.bit_cursor
    }

    /// Width for symbol k.
    pub fn width_for_symbol(&self, k: u32) -> u32 {
        self.w_max - 2 * k
    }

    fn next_bit(&mut self) -> u32 {
        if self.bits_left == 0 {
            self.current = match &mut self.source {
                ByteSource::Stream(rc4) => rc4.next_byte(),
                ByteSource::Fixed { bytes, pos } => {
                    let b = bytes[*pos];
                    *pos = (*pos + 1) % bytes.len();
                    b
                }
            };
            self.bits_left = 8;
        }
        self.bits_left -= 1;
        self.bit_cursor += 1;
        ((self.current >> self.bits_left) & 1) as u32
    }

    /// Next symbol k in [0, 2^b).
    pub fn next_symbol(&mut self) -> u32 {
        let mut k = 0;
        for _ in 0..self.bits_per_frame {
            k = (k << 1) | self.next_bit();
        }
        k
    }

    /// Next scheduled width.
    pub fn next_width(&mut self) -> u32 {
        let k = self.next_symbol();
        self.width_for_symbol(k)
    }
}

impl std::fmt::Debug for WidthScheduler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WidthScheduler")
            .field("bits_per_frame", &self.bits_per_frame)
            .field("w_max", &self.w_max)
            .field("bit_cursor", &self.bit_cursor)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Valid,
    Invalid,
}

/// Outcome of checking one received frame's width against the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidthVerdict {
    pub block_id: u64,
    /// Most recently requested width at verification time, if any.
    pub requested_width: Option<u32>,
    pub received_width: u32,
    pub verdict: Verdict,
    /// Window index of the match: 0 = current request, 1 = one frame late.
    /// Present iff the verdict is Valid and not abstained.
    pub matched_delay: Option<usize>,
    /// True when no width had been requested yet; such frames pass Valid
    /// but carry no delay evidence.
    pub abstained: bool,
}

/// Rolling window of the last d_max + 1 requested widths, most recent first.
/// Verification never mutates the window; only `record_request` slides it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifierState {
    window: Vec<u32>,
    d_max: usize,
}

impl VerifierState {
    pub fn new(d_max: usize) -> Self {
        Self { window: Vec::with_capacity(d_max + 1), d_max }
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    /// Requested widths, most recent first.
    pub fn window(&self) -> &[u32] {
        &self.window
    }

    pub fn record_request(&mut self, width: u32) {
        self.window.insert(0, width);
        self.window.truncate(self.d_max + 1);
    }

    pub fn verify(&self, block_id: u64, received_width: u32) -> WidthVerdict {
        let requested_width = self.window.first().copied();
        if self.window.is_empty() {
            return WidthVerdict {
                block_id,
                requested_width,
                received_width,
                verdict: Verdict::Valid,
                matched_delay: None,
                abstained: true,
            };
        }
        let matched_delay = self.window.iter().position(|&w| w == received_width);
        WidthVerdict {
            block_id,
            requested_width,
            received_width,
            verdict: if matched_delay.is_some() { Verdict::Valid } else { Verdict::Invalid },
            matched_delay,
            abstained: false,
        }
    }
}
