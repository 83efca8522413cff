//! Field serialization: the binary `.mfld` format and its JSON mirror.
//!
//! `.mfld` layout (little endian): magic `MFLD1`, `u32 n`, `u32 N`,
//! `f64 L`, `u32 d`, `u8` representation (0 spatial, 1 frequency), then
//! `N^n d^2` complex values as interleaved `(re, im)` f64 pairs, site-major
//! and row-major inside each matrix.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Field, GridSpec, Representation};
use crate::linalg::C64;

pub const MFLD_MAGIC: &[u8; 5] = b"MFLD1";
pub const FIELD_JSON_SCHEMA: &str = "ncsms.field/1";

fn format_err(reason: impl Into<String>) -> Error {
    Error::Format {
        path: None,
        reason: reason.into(),
    }
}

pub fn encode_mfld<R: Representation>(field: &Field<R>) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(26 + field.values().len() * 16);
    out.extend_from_slice(MFLD_MAGIC);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.size() as u32).to_le_bytes());
    out.extend_from_slice(&grid.length().to_le_bytes());
    out.extend_from_slice(&(field.matrix_dim() as u32).to_le_bytes());
    out.push(R::FLAG);
    for z in field.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(format_err("truncated file"));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

fn read_u32(bytes: &mut &[u8]) -> Result<u32> {
    Ok(u32::from_le_bytes(take(bytes, 4)?.try_into().expect("4 bytes")))
}

fn read_f64(bytes: &mut &[u8]) -> Result<f64> {
    Ok(f64::from_le_bytes(take(bytes, 8)?.try_into().expect("8 bytes")))
}

/// Reads just the representation flag of an encoded field.
pub fn peek_representation(bytes: &[u8]) -> Result<u8> {
    if bytes.len() < 26 || &bytes[..5] != MFLD_MAGIC {
        return Err(format_err("missing MFLD1 header"));
    }
    Ok(bytes[25])
}

pub fn decode_mfld<R: Representation>(mut bytes: &[u8]) -> Result<Field<R>> {
    let magic = take(&mut bytes, 5)?;
    if magic != MFLD_MAGIC {
        return Err(format_err("bad magic"));
    }
    let n = read_u32(&mut bytes)? as usize;
    let size = read_u32(&mut bytes)? as usize;
    let length = read_f64(&mut bytes)?;
    let d = read_u32(&mut bytes)? as usize;
    let flag = take(&mut bytes, 1)?[0];
    if flag != R::FLAG {
        return Err(format_err(format!(
            "representation flag {flag} does not match the requested {}",
            R::FLAG
        )));
    }
    let grid = GridSpec::new(n, size, length)?;
    let count = grid.num_sites() * d * d;
    if bytes.len() != count * 16 {
        return Err(format_err(format!(
            "payload has {} bytes, expected {}",
            bytes.len(),
            count * 16
        )));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Field::from_values(grid, d, values)
}

pub fn write_mfld<R: Representation>(field: &Field<R>, path: impl AsRef<Path>) -> Result<()> {
    let mut file = fs::File::create(path.as_ref())?;
    file.write_all(&encode_mfld(field))?;
    Ok(())
}

pub fn read_mfld<R: Representation>(path: impl AsRef<Path>) -> Result<Field<R>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_mfld(&bytes).map_err(|e| match e {
        Error::Format { reason, .. } => Error::Format {
            path: Some(path.to_path_buf()),
            reason,
        },
        other => other,
    })
}

/// JSON mirror of `.mfld`, meant for small fields in tests and configs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldJson {
    pub schema: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub d: usize,
    pub representation: u8,
    /// `[re, im]` pairs in `.mfld` order.
    pub values: Vec<[f64; 2]>,
}

impl FieldJson {
    pub fn from_field<R: Representation>(field: &Field<R>) -> Self {
        let grid = field.grid();
        Self {
            schema: FIELD_JSON_SCHEMA.to_string(),
            n: grid.dim(),
            size: grid.size(),
            length: grid.length(),
            d: field.matrix_dim(),
            representation: R::FLAG,
            values: field.values().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn into_field<R: Representation>(self) -> Result<Field<R>> {
        if self.schema != FIELD_JSON_SCHEMA {
            return Err(format_err(format!("unknown schema {:?}", self.schema)));
        }
        if self.representation != R::FLAG {
            return Err(format_err("representation flag mismatch"));
        }
        let grid = GridSpec::new(self.n, self.size, self.length)?;
        let values = self.values.iter().map(|&[re, im]| C64::new(re, im)).collect();
        Field::from_values(grid, self.d, values)
    }
}
