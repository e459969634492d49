//! 8-bit binary PGM export of a single slice.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::Volume;

/// Slicing axis. The slice image is laid out with rows along the slower of
/// the two remaining axes: z-slices are `x` by `y`, y-slices `x` by `z`,
/// x-slices `y` by `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

fn to_byte(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0)).round() as u8
}

pub fn encode_slice_pgm<T: Real>(v: &Volume<T>, axis: Axis, index: usize) -> Result<Vec<u8>> {
    let d = v.dims();
    let limit = match axis {
        Axis::X => d.nx,
        Axis::Y => d.ny,
        Axis::Z => d.nz,
    };
    if index >= limit {
        return Err(Error::InvalidParameter(format!(
            "slice index {index} out of range for axis {axis:?} with {limit} voxels"
        )));
    }
    let (w, h) = match axis {
        Axis::X => (d.ny, d.nz),
        Axis::Y => (d.nx, d.nz),
        Axis::Z => (d.nx, d.ny),
    };
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for row in 0..h {
        for col in 0..w {
            let (x, y, z) = match axis {
                Axis::X => (index, col, row),
                Axis::Y => (col, index, row),
                Axis::Z => (col, row, index),
            };
            out.push(to_byte(v.get(x, y, z).to_f64_lossy()));
        }
    }
    Ok(out)
}

/// Writes one slice as a P5 PGM, mapping `[0, 1]` to `round(255 x)`.
pub fn export_slice<T: Real>(v: &Volume<T>, axis: Axis, index: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_slice_pgm(v, axis, index)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
