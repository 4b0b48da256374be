//! Binary model files.
//!
//! Numeric fields are little-endian. Offsets in bytes:
//!
//! ```text
//!  0  magic        4   "ELMB"
//!  4  version      u32 1
//!  8  generator    u32 projection generator id
//! 12  master_seed  u64
//! 20  lambda       f64
//! 28  alpha        f64
//! 36  levels       u32 L
//! 40  t_steps      u32 T
//! 44  hidden       u32 J
//! 48  inputs       u32 M
//! 52  classes      u32 K
//! 56  activation   u8  0 = tanh, 1 = sign
//! 57  weights      L·T matrices of J×K f64, level-major, each row-major
//!  …  checksum     u64 CRC-64/XZ of every preceding byte
//! ```
//!
//! Projection matrices are not stored; they are regenerated from the seed
//! and generator id at prediction time.

use std::fs;
use std::path::{Path, PathBuf};

use crc::{Crc, CRC_64_XZ};
use elmboost_core::boost::{BoostError, BoostedModel, HyperParams};
use elmboost_core::linalg::Matrix;
use elmboost_core::projection::{Activation, GeneratorId};

pub const MAGIC: [u8; 4] = *b"ELMB";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 57;
pub const CHECKSUM_LEN: usize = 8;

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (magic {0:02x?})")]
    BadMagic([u8; 4]),
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated model file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("model file has {extra} bytes beyond its declared size")]
    TrailingBytes { extra: usize },
    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("unknown projection generator id {0}")]
    UnknownGenerator(u32),
    #[error("unknown activation code {0}")]
    UnknownActivation(u8),
    #[error("model dimensions do not fit the u32 fields of the file format")]
    TooLarge,
    #[error("inconsistent model: {0}")]
    Invalid(#[from] BoostError),
}

/// File size for a model of the given dimensions.
pub fn file_len(levels: usize, t_steps: usize, hidden: usize, classes: usize) -> Option<usize> {
    levels
        .checked_mul(t_steps)?
        .checked_mul(hidden)?
        .checked_mul(classes)?
        .checked_mul(8)?
        .checked_add(HEADER_LEN + CHECKSUM_LEN)
}

fn to_u32(v: usize) -> Result<u32, ModelError> {
    u32::try_from(v).map_err(|_| ModelError::TooLarge)
}

pub fn encode(model: &BoostedModel) -> Result<Vec<u8>, ModelError> {
    let hyper = model.hyper();
    let len = file_len(hyper.levels, hyper.t_steps, hyper.hidden, model.classes())
        .ok_or(ModelError::TooLarge)?;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&model.generator().as_u32().to_le_bytes());
    out.extend_from_slice(&hyper.master_seed.to_le_bytes());
    out.extend_from_slice(&hyper.lambda.to_le_bytes());
    out.extend_from_slice(&hyper.alpha.to_le_bytes());
    for v in [hyper.levels, hyper.t_steps, hyper.hidden, model.inputs(), model.classes()] {
        out.extend_from_slice(&to_u32(v)?.to_le_bytes());
    }
    out.push(hyper.activation.code());
    debug_assert_eq!(out.len(), HEADER_LEN);
    for w in model.weights() {
        for v in w.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&CRC64.checksum(&out).to_le_bytes());
    debug_assert_eq!(out.len(), len);
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let v = self.bytes[self.at..self.at + N].try_into().expect("length checked");
        self.at += N;
        v
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn decode(bytes: &[u8]) -> Result<BoostedModel, ModelError> {
    let truncated = |expected| ModelError::Truncated {
        expected,
        found: bytes.len(),
    };
    if bytes.len() < 8 {
        return Err(truncated(HEADER_LEN + CHECKSUM_LEN));
    }
    let mut cur = Cursor { bytes, at: 0 };
    let magic: [u8; 4] = cur.take();
    if magic != MAGIC {
        return Err(ModelError::BadMagic(magic));
    }
    let version = cur.u32();
    if version != VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(truncated(HEADER_LEN + CHECKSUM_LEN));
    }
    let generator_id = cur.u32();
    let master_seed = cur.u64();
    let lambda = cur.f64();
    let alpha = cur.f64();
    let [levels, t_steps, hidden, inputs, classes] = [(); 5].map(|_| cur.u32() as usize);
    let activation_code = cur.take::<1>()[0];

    let expected = file_len(levels, t_steps, hidden, classes).ok_or(ModelError::TooLarge)?;
    if bytes.len() < expected {
        return Err(truncated(expected));
    }
    if bytes.len() > expected {
        return Err(ModelError::TrailingBytes {
            extra: bytes.len() - expected,
        });
    }
    let body = &bytes[..expected - CHECKSUM_LEN];
    let stored = u64::from_le_bytes(bytes[expected - CHECKSUM_LEN..].try_into().expect("8 bytes"));
    let computed = CRC64.checksum(body);
    if stored != computed {
        return Err(ModelError::ChecksumMismatch { stored, computed });
    }

    let generator =
        GeneratorId::from_u32(generator_id).ok_or(ModelError::UnknownGenerator(generator_id))?;
    let activation =
        Activation::from_code(activation_code).ok_or(ModelError::UnknownActivation(activation_code))?;
    let hyper = HyperParams {
        lambda,
        alpha,
        t_steps,
        levels,
        hidden,
        activation,
        master_seed,
    };
    let per_matrix = hidden * classes;
    let weights = (0..levels * t_steps)
        .map(|_| {
            let data = (0..per_matrix).map(|_| cur.f64()).collect();
            Matrix::new(hidden, classes, data).expect("sized from header")
        })
        .collect();
    Ok(BoostedModel::from_parts(hyper, generator, inputs, classes, weights)?)
}

pub fn save(model: &BoostedModel, path: &Path) -> Result<(), ModelError> {
    let bytes = encode(model)?;
    fs::write(path, bytes).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load(path: &Path) -> Result<BoostedModel, ModelError> {
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
