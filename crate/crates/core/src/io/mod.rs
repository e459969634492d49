//! Volume persistence, dataset manifests and slice previews.

mod manifest;
mod native;
mod nifti;
mod pgm;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{Class, Dims, LabelMap, Spacing, Volume};

pub use manifest::{parse_manifest, read_manifest, write_manifest, DatasetManifest, ManifestEntry};
pub use native::{decode_native, encode_native, read_native, write_native, NativeHeader};
pub use nifti::{
    encode_nifti, encode_nifti_label, parse_nifti, read_nifti, write_nifti, write_nifti_label,
};
pub use pgm::{encode_slice_pgm, export_slice, Axis};

/// On-disk voxel type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarType {
    U8,
    I16,
    F32,
}

impl ScalarType {
    pub fn size(self) -> usize {
        match self {
            ScalarType::U8 => 1,
            ScalarType::I16 => 2,
            ScalarType::F32 => 4,
        }
    }
}

/// Geometry and value scaling of a stored volume.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeHeader {
    pub dims: Dims,
    pub spacing: Spacing,
    pub scalar: ScalarType,
    /// Applied as `value = raw * slope + intercept`; never zero.
    pub slope: f64,
    pub intercept: f64,
}

/// Decoded voxel values before they are interpreted as image or label.
#[derive(Clone, Debug, PartialEq)]
pub struct RawVolume {
    pub header: VolumeHeader,
    pub values: Vec<f64>,
}

impl RawVolume {
    pub fn into_volume<T: Real>(self) -> Result<Volume<T>> {
        let data = self.values.into_iter().map(T::of).collect();
        Volume::new(self.header.dims, self.header.spacing, data)
    }

    /// Interprets values as classes; each must be an integer in `0..=65535`.
    pub fn into_label_map(self) -> Result<LabelMap> {
        let mut data = Vec::with_capacity(self.values.len());
        for (i, v) in self.values.into_iter().enumerate() {
            if v.fract() != 0.0 || !(0.0..=Class::MAX as f64).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "label voxel {i} has value {v}, not a class id"
                )));
            }
            data.push(v as Class);
        }
        LabelMap::new(self.header.dims, self.header.spacing, data)
    }
}

/// Storage format chosen by file extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    /// `.nii`
    Nifti,
    /// `.vol`
    Native,
}

impl Format {
    pub fn of_path(path: &Path) -> Result<Self> {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.ends_with(".nii.gz") {
            return Err(Error::InvalidInput(format!(
                "{}: compressed NIfTI is not supported; decompress to .nii first (e.g. `gunzip -k`)",
                path.display()
            )));
        }
        match path.extension().and_then(|e| e.to_str()) {
            Some("nii") => Ok(Format::Nifti),
            Some("vol") => Ok(Format::Native),
            _ => Err(Error::InvalidInput(format!(
                "{}: unknown volume format (expected .nii or .vol)",
                path.display()
            ))),
        }
    }
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<RawVolume> {
    let path = path.as_ref();
    match Format::of_path(path)? {
        Format::Nifti => read_nifti(path),
        Format::Native => read_native(path),
    }
}

pub fn read_volume<T: Real>(path: impl AsRef<Path>) -> Result<Volume<T>> {
    read_raw(path)?.into_volume()
}

pub fn read_label(path: impl AsRef<Path>) -> Result<LabelMap> {
    read_raw(path)?.into_label_map()
}

pub fn write_volume<T: Real>(v: &Volume<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match Format::of_path(path)? {
        Format::Nifti => write_nifti(v, path),
        Format::Native => write_native(v, path),
    }
}

pub fn write_label(l: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match Format::of_path(path)? {
        Format::Nifti => write_nifti_label(l, path),
        Format::Native => {
            let data = l.data().iter().map(|&c| c as f32).collect();
            write_native(&Volume::new(l.dims(), l.spacing(), data)?, path)
        }
    }
}
