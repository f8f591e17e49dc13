//! Binary PNM codec, restricted to the P5/P6 subset with maxval 255.
//!
//! Decoding follows the pixmap convention: tokens in the header may be
//! separated by any run of whitespace, `#` starts a comment that runs to the
//! end of the line, and exactly one whitespace byte separates the maxval from
//! the raster. Every error carries the byte offset it was detected at.

use thiserror::Error;

use super::Image;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PnmError {
    #[error("byte {offset}: bad magic, expected P5 or P6")]
    BadMagic { offset: usize },
    #[error("byte {offset}: unexpected end of header, expected {expected}")]
    UnexpectedEof {
        offset: usize,
        expected: &'static str,
    },
    #[error("byte {offset}: expected {expected}")]
    BadToken {
        offset: usize,
        expected: &'static str,
    },
    #[error("byte {offset}: zero is not a valid dimension")]
    ZeroDimension { offset: usize },
    #[error("byte {offset}: unsupported maxval {maxval}, only 255 is accepted")]
    BadMaxval { offset: usize, maxval: u64 },
    #[error("byte {offset}: expected a single whitespace byte before the raster")]
    MissingSeparator { offset: usize },
    #[error("byte {offset}: truncated raster, expected {expected} bytes but found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("byte {offset}: raster of {samples} samples exceeds the supported size")]
    Oversized { offset: usize, samples: u64 },
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.data.get(self.pos).copied()
    }

    /// Skips whitespace and `#` comments. Returns how many bytes were
    /// consumed so callers can insist on at least one separator.
    fn skip_space_and_comments(&mut self) -> usize {
        let start = self.pos;
        loop {
            match self.peek() {
                Some(b' ') | Some(b'\t') | Some(b'\r') | Some(b'\n') => self.pos += 1,
                Some(b'#') => {
                    while let Some(b) = self.peek() {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        self.pos - start
    }

    fn ascii_uint(&mut self, expected: &'static str) -> Result<(u64, usize), PnmError> {
        let offset = self.pos;
        match self.peek() {
            None => Err(PnmError::UnexpectedEof { offset, expected }),
            Some(b) if !b.is_ascii_digit() => Err(PnmError::BadToken { offset, expected }),
            Some(_) => {
                let mut value: u64 = 0;
                while let Some(b) = self.peek() {
                    if !b.is_ascii_digit() {
                        break;
                    }
                    value = value
                        .saturating_mul(10)
                        .saturating_add((b - b'0') as u64);
                    self.pos += 1;
                }
                Ok((value, offset))
            }
        }
    }
}

/// Decodes a binary P5 (grayscale) or P6 (RGB) image with maxval 255.
pub fn decode_pnm(data: &[u8]) -> Result<Image, PnmError> {
    let channels: u8 = match (data.first(), data.get(1)) {
        (Some(b'P'), Some(b'5')) => 1,
        (Some(b'P'), Some(b'6')) => 3,
        _ => return Err(PnmError::BadMagic { offset: 0 }),
    };
    let mut cur = Cursor { data, pos: 2 };

    if cur.skip_space_and_comments() == 0 {
        return Err(PnmError::BadToken {
            offset: cur.pos,
            expected: "whitespace after magic",
        });
    }
    let (width, w_off) = cur.ascii_uint("width")?;
    if cur.skip_space_and_comments() == 0 {
        return Err(PnmError::BadToken {
            offset: cur.pos,
            expected: "whitespace after width",
        });
    }
    let (height, h_off) = cur.ascii_uint("height")?;
    if cur.skip_space_and_comments() == 0 {
        return Err(PnmError::BadToken {
            offset: cur.pos,
            expected: "whitespace after height",
        });
    }
    let (maxval, m_off) = cur.ascii_uint("maxval")?;

    if width == 0 {
        return Err(PnmError::ZeroDimension { offset: w_off });
    }
    if height == 0 {
        return Err(PnmError::ZeroDimension { offset: h_off });
    }
    if maxval != 255 {
        return Err(PnmError::BadMaxval {
            offset: m_off,
            maxval,
        });
    }

    // Exactly one whitespace byte between the maxval and the raster.
    match cur.peek() {
        None => {
            return Err(PnmError::UnexpectedEof {
                offset: cur.pos,
                expected: "raster separator",
            })
        }
        Some(b' ') | Some(b'\t') | Some(b'\r') | Some(b'\n') => cur.pos += 1,
        Some(_) => return Err(PnmError::MissingSeparator { offset: cur.pos }),
    }

    let samples = width * height * channels as u64;
    if samples > (1 << 31) {
        return Err(PnmError::Oversized {
            offset: cur.pos,
            samples,
        });
    }
    let expected = samples as usize;
    let found = data.len() - cur.pos;
    if found < expected {
        // Report the offset where the first missing sample would sit.
        return Err(PnmError::Truncated {
            offset: data.len(),
            expected,
            found,
        });
    }
    let pixels = data[cur.pos..cur.pos + expected].to_vec();
    Ok(Image::from_pixels(width as u32, height as u32, channels, pixels)
        .expect("validated header"))
}

/// Encodes to the canonical header `P5\n{w} {h}\n255\n` (or `P6`) followed by
/// the raw interleaved raster.
pub fn encode_pnm(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let header = format!("{}\n{} {}\n255\n", magic, img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}
