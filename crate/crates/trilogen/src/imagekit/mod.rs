//! Deterministic 8-bit image primitives: PNM codec, grayscale conversion,
//! Sobel gradients, bilinear downscaling, and the on-disk frame directory
//! convention shared by every scorer.
//!
//! Conventions fixed across the crate:
//! * all rounding of fractional intensities is round-half-away-from-zero
//!   (`f64::round`),
//! * every convolution samples out-of-range pixels by replicating the edge.

mod frames_dir;
mod ops;
mod pnm;

pub use frames_dir::{read_frames_dir, write_frames_dir, DEFAULT_FPS};
pub use ops::{
    box_filter_5x5, downscale_bilinear, rotate_about_center, sobel_magnitude, to_grayscale,
};
pub use pnm::{decode_pnm, encode_pnm, PnmError};

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("invalid dimensions {width}x{height}: both sides must be at least 1")]
    InvalidDimensions { width: u32, height: u32 },
    #[error("unsupported channel count {0}: expected 1 (grayscale) or 3 (rgb)")]
    BadChannels(u8),
    #[error("pixel buffer holds {found} bytes, expected {expected}")]
    BufferLen { expected: usize, found: usize },
    #[error("image {width}x{height} too small: {op} needs at least {min}x{min}")]
    TooSmall {
        width: u32,
        height: u32,
        op: &'static str,
        min: u32,
    },
    #[error("downscale factor {0} must be greater than 1")]
    BadFactor(f64),
    #[error("grayscale input required, got {0} channels")]
    NotGrayscale(u8),
    #[error("video needs at least one frame")]
    EmptyVideo,
    #[error(
        "frame {index} is {got_w}x{got_h} with {got_c} channels, \
         expected {want_w}x{want_h} with {want_c} channels"
    )]
    FrameMismatch {
        index: usize,
        got_w: u32,
        got_h: u32,
        got_c: u8,
        want_w: u32,
        want_h: u32,
        want_c: u8,
    },
    #[error("{path}: {source}")]
    Pnm { path: PathBuf, source: PnmError },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no frame files found in {0}")]
    NoFrames(PathBuf),
}

/// An 8-bit raster, grayscale (1 channel) or RGB (3 channels, interleaved).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u8,
    pixels: Vec<u8>,
}

impl Image {
    /// Builds an image from raw interleaved samples, validating the
    /// dimension/channel/buffer invariants.
    pub fn from_pixels(
        width: u32,
        height: u32,
        channels: u8,
        pixels: Vec<u8>,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidDimensions { width, height });
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::BadChannels(channels));
        }
        let expected = width as usize * height as usize * channels as usize;
        if pixels.len() != expected {
            return Err(ImageError::BufferLen {
                expected,
                found: pixels.len(),
            });
        }
        Ok(Image {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// A constant-valued image.
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Self {
        Image::from_pixels(
            width,
            height,
            channels,
            vec![value; width as usize * height as usize * channels as usize],
        )
        .expect("filled image dimensions")
    }

    /// A grayscale image computed per pixel from `(x, y)`.
    pub fn from_gray_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Image::from_pixels(width, height, 1, pixels).expect("from_gray_fn dimensions")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Sample value at `(x, y)` for channel `c`. Panics on out-of-range
    /// coordinates; use [`Image::sample_clamped`] for border-replicating reads.
    pub fn at(&self, x: u32, y: u32, c: u8) -> u8 {
        assert!(x < self.width && y < self.height && c < self.channels);
        let idx =
            (y as usize * self.width as usize + x as usize) * self.channels as usize + c as usize;
        self.pixels[idx]
    }

    /// Border-replicating read: coordinates are clamped into range.
    pub fn sample_clamped(&self, x: i64, y: i64, c: u8) -> u8 {
        let cx = x.clamp(0, self.width as i64 - 1) as u32;
        let cy = y.clamp(0, self.height as i64 - 1) as u32;
        self.at(cx, cy, c)
    }
}

/// An ordered frame sequence. Frame rate is carried as metadata only; no
/// operation in the crate depends on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    frames: Vec<Image>,
    fps: f64,
}

impl Video {
    /// Validates that at least one frame exists and that every frame shares
    /// the dimensions and channel count of the first.
    pub fn new(frames: Vec<Image>, fps: f64) -> Result<Self, ImageError> {
        let first = frames.first().ok_or(ImageError::EmptyVideo)?;
        let (w, h, c) = (first.width(), first.height(), first.channels());
        for (index, f) in frames.iter().enumerate() {
            if f.width() != w || f.height() != h || f.channels() != c {
                return Err(ImageError::FrameMismatch {
                    index,
                    got_w: f.width(),
                    got_h: f.height(),
                    got_c: f.channels(),
                    want_w: w,
                    want_h: h,
                    want_c: c,
                });
            }
        }
        Ok(Video { frames, fps })
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }
}

/// Per-pixel gradient magnitude map produced by [`sobel_magnitude`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl GradientMap {
    pub(crate) fn new(width: u32, height: u32, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width as usize * height as usize);
        GradientMap {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn value(&self, x: u32, y: u32) -> f64 {
        assert!(x < self.width && y < self.height);
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
