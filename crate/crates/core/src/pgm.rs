//! Binary PGM (P5) reading and writing.
//!
//! Label maps travel as 8-bit binary PGM: pixel value = category id.
//! The parser reports the byte offset of the first defect it finds.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A decoded 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    /// Row-major, `height * width` bytes.
    pub pixels: Vec<u8>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::PgmParse { offset: self.pos, reason: reason.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_space_and_comments(&mut self) -> Result<()> {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(b) = self.peek() {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn read_number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments()?;
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err(format!("expected {what}")));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse::<usize>().map_err(|_| {
            self.pos = start;
            self.err(format!("{what} out of range"))
        })
    }
}

/// Decodes a binary PGM from raw bytes.
pub fn decode(bytes: &[u8]) -> Result<Pgm> {
    let mut cur = Cursor { bytes, pos: 0 };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(cur.err("expected magic \"P5\""));
    }
    cur.pos = 2;
    let width = cur.read_number("width")?;
    let height = cur.read_number("height")?;
    let maxval = cur.read_number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(cur.err(format!("maxval {maxval} unsupported (need 1..=255)")));
    }
    if width == 0 || height == 0 {
        return Err(cur.err("zero image dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match cur.peek() {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(cur.err("expected whitespace before raster")),
    }
    let need = width * height;
    let got = bytes.len() - cur.pos;
    if got < need {
        cur.pos = bytes.len();
        return Err(cur.err(format!("raster truncated: need {need} bytes, have {got}")));
    }
    let pixels = bytes[cur.pos..cur.pos + need].to_vec();
    Ok(Pgm { width, height, pixels })
}

pub fn read(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Encodes as P5 with maxval 255. Byte-identical output for identical input.
pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel buffer does not match dims");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    fs::write(path, encode(width, height, pixels)).map_err(|e| Error::io(path, e))
}
