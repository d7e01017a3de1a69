//! Binary frame-stack files.
//!
//! Layout, little-endian throughout:
//!
//! | offset | size | field                                   |
//! |-------:|-----:|-----------------------------------------|
//! | 0      | 8    | magic `PHSCRN1\0`                       |
//! | 8      | 4    | `ny` (u32)                              |
//! | 12     | 4    | `nx` (u32)                              |
//! | 16     | 8    | `nt` (u64)                              |
//! | 24     | 8    | pixel spacing, m (f64)                  |
//! | 32     | 8    | sampling frequency, Hz (f64)            |
//! | 40     | 8    | wavelength, m (f64)                     |
//! | 48     | 1    | dtype: 0 = f32, 1 = f64                 |
//! | 49     | 1    | has_mask: 0 or 1                        |
//! | 50     | ny*nx| mask bytes (0/1, row-major), if present |
//! |        |      | frames, time-major then row-major       |

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::series::FrameSeries;

pub const MAGIC: [u8; 8] = *b"PHSCRN1\0";
pub const HEADER_LEN: usize = 50;

/// Sample type of the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32 = 0,
    F64 = 1,
}

impl Dtype {
    pub fn size(self) -> u64 {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(Error::UnknownDtype(other)),
        }
    }
}

/// Encode a series into the stack byte layout.
pub fn encode_stack(series: &FrameSeries, dtype: Dtype) -> Vec<u8> {
    let (nt, ny, nx) = series.frames().dim();
    let mask_len = if series.mask().is_some() { ny * nx } else { 0 };
    let mut out = Vec::with_capacity(HEADER_LEN + mask_len + nt * ny * nx * dtype.size() as usize);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(ny as u32).to_le_bytes());
    out.extend_from_slice(&(nx as u32).to_le_bytes());
    out.extend_from_slice(&(nt as u64).to_le_bytes());
    out.extend_from_slice(&series.delta_m().to_le_bytes());
    out.extend_from_slice(&series.fs_hz().to_le_bytes());
    out.extend_from_slice(&series.lambda_m().to_le_bytes());
    out.push(dtype as u8);
    out.push(series.mask().is_some() as u8);
    if let Some(m) = series.mask() {
        out.extend(m.iter().map(|&v| v as u8));
    }
    for &v in series.frames().iter() {
        match dtype {
            Dtype::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
    out
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn read_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

fn read_f64(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Decode the stack byte layout.
pub fn decode_stack(bytes: &[u8]) -> Result<FrameSeries> {
    let actual = bytes.len() as u64;
    if bytes.len() < MAGIC.len() || bytes[..8] != MAGIC {
        return Err(Error::BadMagic {
            expected: MAGIC,
            found: bytes[..bytes.len().min(8)].to_vec(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated { expected: HEADER_LEN as u64, actual });
    }
    let ny = read_u32(bytes, 8) as u64;
    let nx = read_u32(bytes, 12) as u64;
    let nt = read_u64(bytes, 16);
    let delta = read_f64(bytes, 24);
    let fs = read_f64(bytes, 32);
    let lambda = read_f64(bytes, 40);
    let dtype = Dtype::from_code(bytes[48])?;
    let has_mask = match bytes[49] {
        0 => false,
        1 => true,
        other => {
            return Err(Error::Malformed {
                path: Default::default(),
                reason: format!("has_mask byte must be 0 or 1, got {other}"),
            })
        }
    };

    let overflow = || Error::DimensionOverflow { ny, nx, nt };
    let pixels = ny.checked_mul(nx).ok_or_else(overflow)?;
    let payload = pixels
        .checked_mul(nt)
        .and_then(|n| n.checked_mul(dtype.size()))
        .ok_or_else(overflow)?;
    let mask_len = if has_mask { pixels } else { 0 };
    let expected = (HEADER_LEN as u64)
        .checked_add(mask_len)
        .and_then(|n| n.checked_add(payload))
        .ok_or_else(overflow)?;
    if actual < expected {
        return Err(Error::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(Error::TrailingData { expected, actual });
    }

    let (ny, nx, nt) = (ny as usize, nx as usize, nt as usize);
    let mut at = HEADER_LEN;
    let mask = if has_mask {
        let raw = &bytes[at..at + ny * nx];
        if let Some(bad) = raw.iter().find(|&&b| b > 1) {
            return Err(Error::Malformed {
                path: Default::default(),
                reason: format!("mask byte {bad} is neither 0 nor 1"),
            });
        }
        at += ny * nx;
        Some(Array2::from_shape_vec((ny, nx), raw.iter().map(|&b| b == 1).collect()).expect("sized"))
    } else {
        None
    };
    let data = &bytes[at..];
    let values: Vec<f64> = match dtype {
        Dtype::F32 => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect(),
        Dtype::F64 => data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect(),
    };
    let frames = Array3::from_shape_vec((nt, ny, nx), values).expect("payload length checked");
    FrameSeries::new(frames, delta, fs, lambda, mask)
}

/// Write a series atomically (temp file in the same directory, then rename).
pub fn write_stack(series: &FrameSeries, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    let bytes = encode_stack(series, dtype);
    atomic_write(path.as_ref(), |w| w.write_all(&bytes))
}

pub fn read_stack(path: impl AsRef<Path>) -> Result<FrameSeries> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_stack(&bytes).map_err(|e| match e {
        Error::Malformed { reason, .. } => Error::Malformed {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}
