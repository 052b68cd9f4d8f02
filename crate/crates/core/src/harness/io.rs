//! Frame file formats: binary PGM/PPM and the `FQC1` raw f32 container.
//!
//! rawf32 layout, all little-endian:
//!
//! ```text
//! 0   magic  b"FQC1"
//! 4   u32    height
//! 8   u32    width
//! 12  u32    frame count
//! 16  f32    height * width * count samples, frame-major then row-major
//! ```

use std::fs;
use std::path::Path;

use crate::error::{FreqCacheError, Result};
use crate::frame::Frame;

pub const RAWF32_MAGIC: &[u8; 4] = b"FQC1";
const RAWF32_HEADER: usize = 16;

/// BT.601 luma weights.
pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFormat {
    Pnm,
    RawF32,
}

impl FrameFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "pgm" | "ppm" | "pnm" => Some(Self::Pnm),
            "fqc" | "f32" | "raw" | "rawf32" => Some(Self::RawF32),
            _ => None,
        }
    }
}

impl std::str::FromStr for FrameFormat {
    type Err = FreqCacheError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgm" | "ppm" | "pnm" => Ok(Self::Pnm),
            "rawf32" => Ok(Self::RawF32),
            other => Err(FreqCacheError::InvalidParameter(format!(
                "unknown frame format `{other}`"
            ))),
        }
    }
}

/// Loads frames from a file, or from every `.pgm`/`.ppm` in a directory in
/// file-name order. `format` defaults to the file extension.
pub fn load_frames(path: &Path, format: Option<FrameFormat>) -> Result<Vec<Frame>> {
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| FrameFormat::from_path(p) == Some(FrameFormat::Pnm))
            .collect();
        files.sort();
        let mut frames = Vec::new();
        for file in files {
            frames.extend(decode_pnm(&fs::read(&file)?)?);
        }
        return Ok(frames);
    }
    let format = format
        .or_else(|| FrameFormat::from_path(path))
        .ok_or_else(|| {
            FreqCacheError::InvalidParameter(format!("cannot infer format of {}", path.display()))
        })?;
    let bytes = fs::read(path)?;
    match format {
        FrameFormat::Pnm => decode_pnm(&bytes),
        FrameFormat::RawF32 => decode_rawf32(&bytes),
    }
}

pub fn encode_rawf32(frames: &[Frame]) -> Result<Vec<u8>> {
    let first = frames
        .first()
        .ok_or_else(|| FreqCacheError::InvalidParameter("no frames to encode".into()))?;
    let (h, w) = (first.height(), first.width());
    let mut out = Vec::with_capacity(RAWF32_HEADER + frames.len() * h * w * 4);
    out.extend_from_slice(RAWF32_MAGIC);
    for v in [h, w, frames.len()] {
        let v = u32::try_from(v)
            .map_err(|_| FreqCacheError::InvalidDimensions(format!("{v} exceeds u32")))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in frames {
        first.ensure_same_dims(f)?;
        for &v in f.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_rawf32(bytes: &[u8]) -> Result<Vec<Frame>> {
    if bytes.len() < RAWF32_HEADER {
        return Err(FreqCacheError::Truncated {
            offset: bytes.len(),
            expected: RAWF32_HEADER,
        });
    }
    if &bytes[..4] != RAWF32_MAGIC {
        return Err(FreqCacheError::Parse {
            offset: 0,
            message: format!("bad magic {:?}, expected \"FQC1\"", &bytes[..4]),
        });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (h, w, count) = (word(4), word(8), word(12));
    if h == 0 || w == 0 {
        return Err(FreqCacheError::Parse {
            offset: if h == 0 { 4 } else { 8 },
            message: format!("zero dimension {h}x{w}"),
        });
    }
    let expected = h
        .checked_mul(w)
        .and_then(|hw| hw.checked_mul(count))
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(RAWF32_HEADER))
        .ok_or_else(|| FreqCacheError::Parse {
            offset: 4,
            message: "declared size overflows".into(),
        })?;
    if bytes.len() < expected {
        return Err(FreqCacheError::Truncated {
            offset: bytes.len(),
            expected,
        });
    }
    if bytes.len() > expected {
        return Err(FreqCacheError::Parse {
            offset: expected,
            message: format!(
                "{} trailing bytes after declared payload",
                bytes.len() - expected
            ),
        });
    }
    let mut frames = Vec::with_capacity(count);
    for t in 0..count {
        let start = RAWF32_HEADER + t * h * w * 4;
        let data: Vec<f64> = bytes[start..start + h * w * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        frames.push(Frame::new(h, w, data).map_err(|e| match e {
            FreqCacheError::NonFinite { index } => FreqCacheError::Parse {
                offset: start + index * 4,
                message: "non-finite sample".into(),
            },
            other => other,
        })?);
    }
    Ok(frames)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err(&self, message: impl Into<String>) -> FreqCacheError {
        FreqCacheError::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a decimal number"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| FreqCacheError::Parse {
                offset: start,
                message: "number out of range".into(),
            })
    }
}

/// Decodes one or more concatenated binary P5/P6 images.
///
/// Samples map to `[0, 1]` by dividing by maxval; P6 is reduced to luma.
pub fn decode_pnm(bytes: &[u8]) -> Result<Vec<Frame>> {
    let mut cur = Cursor { bytes, pos: 0 };
    let mut frames = Vec::new();
    loop {
        cur.skip_space_and_comments();
        if cur.pos >= bytes.len() {
            break;
        }
        frames.push(decode_one_pnm(&mut cur)?);
    }
    if frames.is_empty() {
        return Err(FreqCacheError::Parse {
            offset: 0,
            message: "no image data".into(),
        });
    }
    Ok(frames)
}

fn decode_one_pnm(cur: &mut Cursor<'_>) -> Result<Frame> {
    let magic_at = cur.pos;
    let channels = match cur.bytes.get(magic_at..magic_at + 2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(cur.err("expected binary PNM magic P5 or P6")),
    };
    cur.pos += 2;
    let width = cur.number()?;
    let height = cur.number()?;
    let maxval = cur.number()?;
    if width == 0 || height == 0 {
        return Err(cur.err(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(cur.err(format!("maxval {maxval} outside 1..=65535")));
    }
    match cur.bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(cur.err("expected a single whitespace byte before the raster")),
    }
    let sample_bytes = if maxval > 255 { 2 } else { 1 };
    let needed = width * height * channels * sample_bytes;
    let start = cur.pos;
    if cur.bytes.len() < start + needed {
        return Err(FreqCacheError::Truncated {
            offset: cur.bytes.len(),
            expected: start + needed,
        });
    }
    let raster = &cur.bytes[start..start + needed];
    cur.pos += needed;
    let scale = maxval as f64;
    let sample = |k: usize| -> f64 {
        if sample_bytes == 2 {
            u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]]) as f64
        } else {
            raster[k] as f64
        }
    };
    let data = (0..width * height)
        .map(|px| {
            if channels == 1 {
                sample(px) / scale
            } else {
                (0..3).map(|ch| LUMA[ch] * sample(3 * px + ch)).sum::<f64>() / scale
            }
        })
        .collect();
    Frame::new(height, width, data)
}

/// Binary P5 with maxval 255.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(
        pixels.len(),
        width * height,
        "pixel count must match dimensions"
    );
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Quantizes a frame to 8 bits, clamping to `[0, 1]`.
pub fn frame_to_pgm(frame: &Frame) -> Vec<u8> {
    let pixels: Vec<u8> = frame
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    encode_pgm(frame.width(), frame.height(), &pixels)
}
