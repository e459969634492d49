//! Single-file NIfTI-1 (`.nii`, magic `n+1\0`) reading and writing.
//!
//! Supports 3D data of type u8, i16 or f32 in either byte order. Orientation
//! (qform/sform) is ignored: only dims and pixdim spacing are used. Spacing is
//! stored as f32 on disk, so it round-trips exactly only when f32-representable.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{Dims, LabelMap, Volume};

use super::{RawVolume, ScalarType, VolumeHeader};

pub const HEADER_SIZE: usize = 348;
pub const VOX_OFFSET: usize = 352;
pub const MAGIC: &[u8; 4] = b"n+1\0";

pub const DT_UINT8: i16 = 2;
pub const DT_INT16: i16 = 4;
pub const DT_FLOAT32: i16 = 16;

/// NIfTI-1 header field byte offsets.
mod offsets {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const DESCRIP: usize = 148;
    pub const MAGIC: usize = 344;
}

const NIFTI_UNITS_MM: u8 = 2;

#[derive(Clone, Copy)]
struct Reader<'a> {
    bytes: &'a [u8],
    big_endian: bool,
}

impl Reader<'_> {
    fn array<const N: usize>(&self, at: usize) -> [u8; N] {
        self.bytes[at..at + N].try_into().expect("offset within header")
    }

    fn i16(&self, at: usize) -> i16 {
        let b = self.array(at);
        if self.big_endian {
            i16::from_be_bytes(b)
        } else {
            i16::from_le_bytes(b)
        }
    }

    fn f32(&self, at: usize) -> f32 {
        let b = self.array(at);
        if self.big_endian {
            f32::from_be_bytes(b)
        } else {
            f32::from_le_bytes(b)
        }
    }
}

impl ScalarType {
    fn from_nifti(code: i16) -> Option<Self> {
        match code {
            DT_UINT8 => Some(ScalarType::U8),
            DT_INT16 => Some(ScalarType::I16),
            DT_FLOAT32 => Some(ScalarType::F32),
            _ => None,
        }
    }

    fn nifti_code(self) -> i16 {
        match self {
            ScalarType::U8 => DT_UINT8,
            ScalarType::I16 => DT_INT16,
            ScalarType::F32 => DT_FLOAT32,
        }
    }
}

/// Parses an in-memory `.nii` file.
pub fn parse_nifti(bytes: &[u8]) -> Result<RawVolume> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::nifti(
            "sizeof_hdr",
            format!("file has {} bytes, shorter than the 348-byte header", bytes.len()),
        ));
    }
    let raw_size: [u8; 4] = bytes[offsets::SIZEOF_HDR..4].try_into().unwrap();
    let big_endian = if i32::from_le_bytes(raw_size) == HEADER_SIZE as i32 {
        false
    } else if i32::from_be_bytes(raw_size) == HEADER_SIZE as i32 {
        true
    } else {
        return Err(Error::nifti(
            "sizeof_hdr",
            format!("expected 348 in either byte order, got {}", i32::from_le_bytes(raw_size)),
        ));
    };
    let r = Reader { bytes, big_endian };

    if &bytes[offsets::MAGIC..offsets::MAGIC + 4] != MAGIC {
        return Err(Error::nifti(
            "magic",
            format!(
                "expected single-file magic \"n+1\\0\", got {:?}",
                &bytes[offsets::MAGIC..offsets::MAGIC + 4]
            ),
        ));
    }

    let dim: Vec<i16> = (0..8).map(|i| r.i16(offsets::DIM + 2 * i)).collect();
    let ndim = dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(Error::nifti("dim", format!("dim[0] = {ndim} is not in 1..=7")));
    }
    let ndim = ndim as usize;
    let mut extent = [1usize; 3];
    for (i, &d) in dim.iter().enumerate().skip(1).take(ndim) {
        if d < 1 {
            return Err(Error::nifti("dim", format!("dim[{i}] = {d} must be >= 1")));
        }
        if i <= 3 {
            extent[i - 1] = d as usize;
        } else if d != 1 {
            return Err(Error::nifti(
                "dim",
                format!("dim[{i}] = {d}: only single-channel 3D volumes are supported"),
            ));
        }
    }
    let dims = Dims::from(extent);

    let datatype = r.i16(offsets::DATATYPE);
    let scalar = ScalarType::from_nifti(datatype).ok_or_else(|| {
        Error::nifti(
            "datatype",
            format!("unsupported datatype code {datatype} (supported: 2 = u8, 4 = i16, 16 = f32)"),
        )
    })?;
    let bitpix = r.i16(offsets::BITPIX);
    if bitpix as usize != 8 * scalar.size() {
        return Err(Error::nifti(
            "bitpix",
            format!("bitpix {bitpix} does not match datatype {datatype}"),
        ));
    }

    let mut spacing = [1.0f64; 3];
    for (a, s) in spacing.iter_mut().enumerate().take(ndim.min(3)) {
        let p = r.f32(offsets::PIXDIM + 4 * (a + 1)).abs() as f64;
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::nifti("pixdim", format!("pixdim[{}] = {p} is not a positive spacing", a + 1)));
        }
        *s = p;
    }

    let vox_offset = r.f32(offsets::VOX_OFFSET);
    if !(vox_offset >= HEADER_SIZE as f32 && vox_offset.fract() == 0.0) {
        return Err(Error::nifti(
            "vox_offset",
            format!("vox_offset {vox_offset} must be an integer >= 348"),
        ));
    }
    let start = vox_offset as usize;
    let need = dims.len() * scalar.size();
    if bytes.len() < start + need {
        return Err(Error::nifti(
            "vox_offset",
            format!(
                "truncated payload: {} bytes after offset {start}, need {need}",
                bytes.len().saturating_sub(start)
            ),
        ));
    }
    let payload = &bytes[start..start + need];
    let mut values: Vec<f64> = match scalar {
        ScalarType::U8 => payload.iter().map(|&b| b as f64).collect(),
        ScalarType::I16 => payload
            .chunks_exact(2)
            .map(|c| Reader { bytes: c, big_endian }.i16(0) as f64)
            .collect(),
        ScalarType::F32 => payload
            .chunks_exact(4)
            .map(|c| Reader { bytes: c, big_endian }.f32(0) as f64)
            .collect(),
    };

    let slope = r.f32(offsets::SCL_SLOPE) as f64;
    let intercept = r.f32(offsets::SCL_INTER) as f64;
    let scaled = slope != 0.0 && slope.is_finite();
    if scaled {
        let inter = if intercept.is_finite() { intercept } else { 0.0 };
        values.iter_mut().for_each(|v| *v = *v * slope + inter);
    }
    Ok(RawVolume {
        header: VolumeHeader {
            dims,
            spacing,
            scalar,
            slope: if scaled { slope } else { 1.0 },
            intercept: if scaled && intercept.is_finite() { intercept } else { 0.0 },
        },
        values,
    })
}

pub fn read_nifti(path: impl AsRef<Path>) -> Result<RawVolume> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_nifti(&bytes)
}

fn encode(dims: Dims, spacing: [f64; 3], scalar: ScalarType, payload: &[u8]) -> Vec<u8> {
    let mut h = vec![0u8; VOX_OFFSET];
    let mut put = |at: usize, b: &[u8]| h[at..at + b.len()].copy_from_slice(b);
    put(offsets::SIZEOF_HDR, &(HEADER_SIZE as i32).to_le_bytes());
    let dim: [i16; 8] = [3, dims.nx as i16, dims.ny as i16, dims.nz as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        put(offsets::DIM + 2 * i, &d.to_le_bytes());
    }
    put(offsets::DATATYPE, &scalar.nifti_code().to_le_bytes());
    put(offsets::BITPIX, &(8 * scalar.size() as i16).to_le_bytes());
    let pixdim = [1.0f32, spacing[0] as f32, spacing[1] as f32, spacing[2] as f32];
    for (i, p) in pixdim.iter().enumerate() {
        put(offsets::PIXDIM + 4 * i, &p.to_le_bytes());
    }
    put(offsets::VOX_OFFSET, &(VOX_OFFSET as f32).to_le_bytes());
    put(offsets::SCL_SLOPE, &1.0f32.to_le_bytes());
    put(offsets::SCL_INTER, &0.0f32.to_le_bytes());
    put(offsets::XYZT_UNITS, &[NIFTI_UNITS_MM]);
    put(offsets::DESCRIP, b"dstaug");
    put(offsets::MAGIC, MAGIC);
    h.extend_from_slice(payload);
    h
}

fn check_dims(dims: Dims) -> Result<()> {
    if dims.as_array().iter().any(|&n| n > i16::MAX as usize) {
        return Err(Error::InvalidInput(format!(
            "dims {dims} exceed the NIfTI-1 limit of 32767 per axis"
        )));
    }
    Ok(())
}

/// Encodes a volume as little-endian f32 NIfTI-1 with `vox_offset` 352.
pub fn encode_nifti<T: Real>(v: &Volume<T>) -> Result<Vec<u8>> {
    check_dims(v.dims())?;
    let mut payload = Vec::with_capacity(4 * v.data().len());
    for (i, x) in v.data().iter().enumerate() {
        let f = x.to_f32().unwrap_or(f32::NAN);
        if !f.is_finite() {
            return Err(Error::InvalidInput(format!(
                "voxel {i} is not representable as a finite f32"
            )));
        }
        payload.extend_from_slice(&f.to_le_bytes());
    }
    Ok(encode(v.dims(), v.spacing(), ScalarType::F32, &payload))
}

pub fn write_nifti<T: Real>(v: &Volume<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_nifti(v)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Encodes a label map as u8 when every class fits, else i16.
pub fn encode_nifti_label(l: &LabelMap) -> Result<Vec<u8>> {
    check_dims(l.dims())?;
    let max = l.classes().iter().next_back().copied().unwrap_or(0);
    let payload: Vec<u8> = if max <= u8::MAX as u16 {
        l.data().iter().map(|&c| c as u8).collect()
    } else if max <= i16::MAX as u16 {
        l.data().iter().flat_map(|&c| (c as i16).to_le_bytes()).collect()
    } else {
        return Err(Error::InvalidInput(format!(
            "label class {max} does not fit the i16 NIfTI payload"
        )));
    };
    let scalar = if max <= u8::MAX as u16 {
        ScalarType::U8
    } else {
        ScalarType::I16
    };
    Ok(encode(l.dims(), l.spacing(), scalar, &payload))
}

pub fn write_nifti_label(l: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_nifti_label(l)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
