//! Native raw volume format.
//!
//! One header line of JSON terminated by `\n`, followed immediately by the
//! voxel payload as little-endian IEEE-754 f32 in x-fastest order:
//!
//! ```text
//! {"format":"dstaug-volume","version":1,"dims":[nx,ny,nz],"spacing":[sx,sy,sz],"dtype":"f32","endian":"little","normalized":false}
//! <nx*ny*nz*4 bytes>
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{Dims, Spacing, Volume};

use super::{RawVolume, ScalarType, VolumeHeader};

pub const FORMAT_TAG: &str = "dstaug-volume";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NativeHeader {
    pub format: String,
    pub version: u32,
    pub dims: Dims,
    pub spacing: Spacing,
    pub dtype: ScalarType,
    pub endian: String,
    #[serde(default)]
    pub normalized: bool,
}

fn parse_error(message: impl Into<String>) -> Error {
    Error::Parse {
        what: "native volume header".into(),
        message: message.into(),
    }
}

pub fn encode_native<T: Real>(v: &Volume<T>) -> Result<Vec<u8>> {
    let header = NativeHeader {
        format: FORMAT_TAG.into(),
        version: FORMAT_VERSION,
        dims: v.dims(),
        spacing: v.spacing(),
        dtype: ScalarType::F32,
        endian: "little".into(),
        normalized: v.is_normalized(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(4 * v.data().len());
    for x in v.data() {
        let f = x.to_f32().unwrap_or(f32::NAN);
        if !f.is_finite() {
            return Err(Error::InvalidInput("volume value not representable as finite f32".into()));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

/// Decodes a native file, returning the header alongside the values.
pub fn decode_native(bytes: &[u8]) -> Result<(NativeHeader, RawVolume)> {
    if bytes.is_empty() {
        return Err(parse_error("line 1, column 0: empty file"));
    }
    let Some(nl) = bytes.iter().position(|&b| b == b'\n') else {
        return Err(parse_error(format!(
            "line 1, column {}: header line is not terminated by a newline",
            bytes.len()
        )));
    };
    let header: NativeHeader = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| parse_error(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    if header.format != FORMAT_TAG || header.version != FORMAT_VERSION {
        return Err(parse_error(format!(
            "line 1: unsupported format {:?} version {}",
            header.format, header.version
        )));
    }
    if header.dtype != ScalarType::F32 || header.endian != "little" {
        return Err(parse_error(format!(
            "line 1: only little-endian f32 payloads are supported, got {:?} {}",
            header.dtype, header.endian
        )));
    }
    let payload = &bytes[nl + 1..];
    let expect = header.dims.len() * 4;
    if payload.len() != expect {
        return Err(Error::InvalidInput(format!(
            "payload has {} bytes but header dims {} need {expect}",
            payload.len(),
            header.dims
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let raw = RawVolume {
        header: VolumeHeader {
            dims: header.dims,
            spacing: header.spacing,
            scalar: ScalarType::F32,
            slope: 1.0,
            intercept: 0.0,
        },
        values,
    };
    Ok((header, raw))
}

pub fn read_native(path: impl AsRef<Path>) -> Result<RawVolume> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_native(&bytes).map(|(_, raw)| raw)
}

pub fn write_native<T: Real>(v: &Volume<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_native(v)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
