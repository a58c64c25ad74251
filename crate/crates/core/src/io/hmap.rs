//! `HMAP` layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "HMAP"
//!      4     4  version (u32) = 1
//!      8     4  k, landmark count (u32)
//!     12     4  height (u32)
//!     16     4  width (u32)
//!     20     4  dtype (u32), 0 = f32
//!     24   4kHW payload, f32, landmark-major then row-major
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::landmark::Heatmap;

pub const MAGIC: [u8; 4] = *b"HMAP";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;
const DTYPE_F32: u32 = 0;

/// Serializes heatmaps. Values are narrowed to `f32`; an empty slice yields
/// a header with `k = 0` and the given fallback dimensions.
pub fn encode_hmap(heatmaps: &[Heatmap], empty_dims: (usize, usize)) -> Result<Vec<u8>> {
    let (height, width) = match heatmaps.first() {
        Some(h) => (h.height(), h.width()),
        None => empty_dims,
    };
    if heatmaps
        .iter()
        .any(|h| h.height() != height || h.width() != width)
    {
        return Err(Error::InvalidInput(
            "all heatmaps of one file must share dimensions".into(),
        ));
    }
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::InvalidInput(format!("{what} {v} exceeds u32")))
    };

    let mut out = Vec::with_capacity(HEADER_LEN + 4 * heatmaps.len() * height * width);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(heatmaps.len(), "landmark count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(height, "height")?.to_le_bytes());
    out.extend_from_slice(&to_u32(width, "width")?.to_le_bytes());
    out.extend_from_slice(&DTYPE_F32.to_le_bytes());
    for h in heatmaps {
        for &v in h.values() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

/// Parses an `HMAP` buffer, rejecting anything that is not exactly one
/// well-formed file.
pub fn decode_hmap(bytes: &[u8]) -> Result<Vec<Heatmap>> {
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated {
            offset: bytes.len() as u64,
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        }
        .into());
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(FormatError::BadMagic {
            offset: 0,
            found: magic,
        }
        .into());
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion {
            offset: 4,
            found: version,
        }
        .into());
    }
    let k = read_u32(bytes, 8) as u64;
    let height = read_u32(bytes, 12) as u64;
    let width = read_u32(bytes, 16) as u64;
    let dtype = read_u32(bytes, 20);
    if dtype != DTYPE_F32 {
        return Err(FormatError::UnsupportedDtype {
            offset: 20,
            found: dtype,
        }
        .into());
    }
    if height == 0 || width == 0 {
        return Err(FormatError::BadHeader {
            offset: 12,
            reason: format!("zero dimension {height}x{width}"),
        }
        .into());
    }

    let expected = k
        .checked_mul(height)
        .and_then(|v| v.checked_mul(width))
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(HEADER_LEN as u64))
        .ok_or_else(|| FormatError::BadHeader {
            offset: 8,
            reason: "payload size overflows".into(),
        })?;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(FormatError::Truncated {
            offset: actual,
            expected,
            actual,
        }
        .into());
    }
    if actual > expected {
        return Err(FormatError::TrailingBytes {
            offset: expected,
            extra: actual - expected,
        }
        .into());
    }

    let (height, width) = (height as usize, width as usize);
    let plane = height * width;
    let mut heatmaps = Vec::with_capacity(k as usize);
    for index in 0..k as usize {
        let start = HEADER_LEN + 4 * index * plane;
        let mut values = Vec::with_capacity(plane);
        for i in 0..plane {
            let at = start + 4 * i;
            let v = f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
            if !v.is_finite() {
                return Err(FormatError::NonFinite { offset: at as u64 }.into());
            }
            values.push(f64::from(v));
        }
        heatmaps.push(Heatmap::new(width, height, values, index)?);
    }
    Ok(heatmaps)
}

pub fn write_hmap(heatmaps: &[Heatmap], path: impl AsRef<Path>) -> Result<()> {
    write_hmap_with_dims(heatmaps, (1, 1), path)
}

/// Like [`write_hmap`], with the dimensions recorded when `heatmaps` is empty.
pub fn write_hmap_with_dims(
    heatmaps: &[Heatmap],
    empty_dims: (usize, usize),
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, encode_hmap(heatmaps, empty_dims)?)?;
    Ok(())
}

pub fn read_hmap(path: impl AsRef<Path>) -> Result<Vec<Heatmap>> {
    decode_hmap(&fs::read(path)?)
}
