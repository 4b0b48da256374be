//! IDX containers as used by the MNIST distribution.
//!
//! All header fields are big-endian `u32`s. Images: magic `0x00000803`,
//! count, rows, cols, then `count·rows·cols` bytes. Labels: magic
//! `0x00000801`, count, then `count` bytes. Files may be gzip-compressed;
//! compression is detected from the leading bytes, not the file name.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("dimensions {count}x{rows}x{cols} do not fit in memory")]
    DimensionOverflow { count: u32, rows: u32, cols: u32 },
    #[error("{extra} trailing bytes after the payload")]
    TrailingBytes { extra: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum IdxError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
}

impl IdxError {
    pub fn path(&self) -> &Path {
        match self {
            IdxError::Io { path, .. } | IdxError::Format { path, .. } => path,
        }
    }
}

/// Images flattened row-major, `rows·cols` bytes each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn width(&self) -> usize {
        self.rows * self.cols
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32, FormatError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(FormatError::Truncated {
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_payload(bytes: &[u8], header: usize, payload: usize) -> Result<(), FormatError> {
    let expected = header + payload;
    if bytes.len() < expected {
        return Err(FormatError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(FormatError::TrailingBytes {
            extra: bytes.len() - expected,
        });
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages, FormatError> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(FormatError::BadMagic {
            expected: IMAGE_MAGIC,
            found: magic,
        });
    }
    let (count, rows, cols) = (be_u32(bytes, 4)?, be_u32(bytes, 8)?, be_u32(bytes, 12)?);
    let payload = (count as usize)
        .checked_mul(rows as usize)
        .and_then(|v| v.checked_mul(cols as usize))
        .filter(|&v| v <= isize::MAX as usize - 16)
        .ok_or(FormatError::DimensionOverflow { count, rows, cols })?;
    check_payload(bytes, 16, payload)?;
    Ok(IdxImages {
        count: count as usize,
        rows: rows as usize,
        cols: cols as usize,
        pixels: bytes[16..].to_vec(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>, FormatError> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(FormatError::BadMagic {
            expected: LABEL_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(bytes, 4)? as usize;
    check_payload(bytes, 8, count)?;
    Ok(bytes[8..].to_vec())
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGE_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Reads a file, transparently inflating it when it starts with the gzip
/// magic bytes.
pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>, IdxError> {
    let io_err = |source| IdxError::Io {
        path: path.to_path_buf(),
        source,
    };
    let raw = fs::read(path).map_err(io_err)?;
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(io_err)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn load_idx_images(path: &Path) -> Result<IdxImages, IdxError> {
    parse_images(&read_maybe_gzip(path)?).map_err(|source| IdxError::Format {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>, IdxError> {
    parse_labels(&read_maybe_gzip(path)?).map_err(|source| IdxError::Format {
        path: path.to_path_buf(),
        source,
    })
}
