//! Raw frame buffers, scene synthesis, demosaicing, and the toy template
//! matcher used to score whether an injected traffic sign survives transport.

mod bayer;
mod distort;
mod io;
mod scene;
mod sign;

pub use bayer::{demosaic, mosaic, mosaic_region};
pub use distort::reinterpret_width;
pub use io::{read_pxb, write_pxb, PXB_MAGIC};
pub use scene::{render_scene_rgb, synth_frame};
pub use sign::{make_template, render_on_background, toy_sign_detect, SIGN_SCORE_THRESHOLD, TOY_DETECT_STRIDE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PixelError {
    #[error("byte length {actual} does not match {width}x{height}")]
    LengthMismatch { width: u32, height: u32, actual: usize },
    #[error("width and height must be positive, got {width}x{height}")]
    ZeroDimension { width: u32, height: u32 },
    #[error("operation requires even dimensions, got {width}x{height}")]
    OddDimension { width: u32, height: u32 },
    #[error("payload of {len} bytes is not a whole number of {width}-byte rows")]
    RaggedPayload { len: usize, width: u32 },
    #[error("payload of {len} bytes is shorter than one {width}-byte row")]
    PayloadTooShort { len: usize, width: u32 },
    #[error("template {tpl_width}x{tpl_height} does not fit in {img_width}x{img_height}")]
    TemplateTooLarge { tpl_width: u32, tpl_height: u32, img_width: u32, img_height: u32 },
    #[error("patch at ({row},{col}) exceeds the {width}x{height} target region")]
    PatchOutOfBounds { row: u32, col: u32, width: u32, height: u32 },
    #[error("scene config invalid: {0}")]
    BadSceneConfig(String),
}

/// Wire code 1. The only mosaic layout the simulated camera emits: rows
/// alternate RG / GB starting with red at (0, 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PixelFormat {
    BayerRg8,
}

impl PixelFormat {
    pub const fn wire_code(self) -> u32 {
        match self {
            PixelFormat::BayerRg8 => 1,
        }
    }

    pub fn from_wire_code(code: u32) -> Option<Self> {
        match code {
            1 => Some(PixelFormat::BayerRg8),
            _ => None,
        }
    }
}

/// One raw frame as transported on the wire: `width * height` mosaic bytes in
/// row-major order. Camera-emitted buffers always have even dimensions (the
/// mosaic repeats every two pixels); resliced buffers may not, and the
/// operations that require evenness check it themselves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PixelBuffer {
    width: u32,
    height: u32,
    format: PixelFormat,
    bytes: Vec<u8>,
}

// Deserialization funnels through `new` so a hand-edited config cannot smuggle
// in a buffer whose byte count disagrees with its geometry.
impl<'de> Deserialize<'de> for PixelBuffer {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            width: u32,
            height: u32,
            #[allow(dead_code)]
            format: PixelFormat,
            bytes: Vec<u8>,
        }
        let w = Wire::deserialize(deserializer)?;
        PixelBuffer::new(w.width, w.height, w.bytes).map_err(serde::de::Error::custom)
    }
}

impl PixelBuffer {
    pub fn new(width: u32, height: u32, bytes: Vec<u8>) -> Result<Self, PixelError> {
        if width == 0 || height == 0 {
            return Err(PixelError::ZeroDimension { width, height });
        }
        if bytes.len() != (width as usize) * (height as usize) {
            return Err(PixelError::LengthMismatch { width, height, actual: bytes.len() });
        }
        Ok(PixelBuffer { width, height, format: PixelFormat::BayerRg8, bytes })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, PixelError> {
        let len = (width as usize) * (height as usize);
        Self::new(width, height, vec![value; len])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn format(&self) -> PixelFormat {
        self.format
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bytes_mut(&mut self) -> &mut [u8] {
        &mut self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn byte(&self, row: u32, col: u32) -> u8 {
        self.bytes[row as usize * self.width as usize + col as usize]
    }

    pub fn ensure_even(&self) -> Result<(), PixelError> {
        if self.width % 2 != 0 || self.height % 2 != 0 {
            return Err(PixelError::OddDimension { width: self.width, height: self.height });
        }
        Ok(())
    }

    /// Left crop to `new_width` columns, keeping the mosaic phase (even crop
    /// widths only). This is how the camera narrows its readout.
    pub fn crop_columns(&self, new_width: u32) -> Result<Self, PixelError> {
        if new_width == 0 || new_width % 2 != 0 {
            return Err(PixelError::OddDimension { width: new_width, height: self.height });
        }
        if new_width > self.width {
            return Err(PixelError::LengthMismatch { width: new_width, height: self.height, actual: self.bytes.len() });
        }
        if new_width == self.width {
            return Ok(self.clone());
        }
        let mut out = Vec::with_capacity(new_width as usize * self.height as usize);
        for row in 0..self.height as usize {
            let start = row * self.width as usize;
            out.extend_from_slice(&self.bytes[start..start + new_width as usize]);
        }
        PixelBuffer::new(new_width, self.height, out)
    }
}

/// Interleaved 8-bit RGB, row major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, PixelError> {
        if width == 0 || height == 0 {
            return Err(PixelError::ZeroDimension { width, height });
        }
        if data.len() != 3 * (width as usize) * (height as usize) {
            return Err(PixelError::LengthMismatch { width, height, actual: data.len() });
        }
        Ok(RgbImage { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, PixelError> {
        let px = (width as usize) * (height as usize);
        let mut data = Vec::with_capacity(3 * px);
        for _ in 0..px {
            data.extend_from_slice(&rgb);
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn px(&self, row: u32, col: u32) -> [u8; 3] {
        let i = 3 * (row as usize * self.width as usize + col as usize);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_px(&mut self, row: u32, col: u32, rgb: [u8; 3]) {
        let i = 3 * (row as usize * self.width as usize + col as usize);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Paste `src` with its top-left corner at (row, col).
    pub fn blit(&mut self, src: &RgbImage, row: u32, col: u32) -> Result<(), PixelError> {
        if row + src.height > self.height || col + src.width > self.width {
            return Err(PixelError::PatchOutOfBounds { row, col, width: self.width, height: self.height });
        }
        for r in 0..src.height {
            for c in 0..src.width {
                self.set_px(row + r, col + c, src.px(r, c));
            }
        }
        Ok(())
    }
}

/// Parameters of the procedurally generated road scene. The scene is a pure
/// function of (seed, world position): band-limited value noise plus
/// high-contrast rectangular blobs, so frames separated in time differ by a
/// rigid translation of `motion` pixels per frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    /// Per-frame translation in pixels: (dx, dy).
    pub motion: (f64, f64),
    /// Lattice spacing of the value noise, in pixels.
    pub texture_scale: f64,
    /// Expected blob count per megapixel; blobs are what the corner detector
    /// feeds on, so this must stay positive.
    pub corner_density: f64,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), PixelError> {
        if self.width == 0 || self.height == 0 {
            return Err(PixelError::ZeroDimension { width: self.width, height: self.height });
        }
        if self.width % 2 != 0 || self.height % 2 != 0 {
            return Err(PixelError::OddDimension { width: self.width, height: self.height });
        }
        if !(self.texture_scale > 0.0) {
            return Err(PixelError::BadSceneConfig(format!("texture_scale must be positive, got {}", self.texture_scale)));
        }
        if !(self.corner_density > 0.0) {
            return Err(PixelError::BadSceneConfig(format!("corner_density must be positive, got {}", self.corner_density)));
        }
        if !self.motion.0.is_finite() || !self.motion.1.is_finite() {
            return Err(PixelError::BadSceneConfig("motion must be finite".into()));
        }
        Ok(())
    }
}

/// The two sign classes an injection tries to put in front of the perception
/// stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignLabel {
    StopSign,
    RedLight,
}

/// A rendered sign image used both as injection content and as the matcher's
/// reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignTemplate {
    pub label: SignLabel,
    pub image: RgbImage,
}
