//! Fused spatial transform: rotation, scaling, elastic deformation and
//! cropping realized as a single coordinate grid over the output crop.
//!
//! Building the grid first and interpolating second means each output voxel
//! is interpolated exactly once. Interpolation only reads the minimal cuboid of
//! the input that the grid touches, so its cost depends on the crop size and
//! not on the size of the input volume.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::blur_separable;
use crate::scalar::Real;
use crate::volume::{nearest_sample, trilinear_blend, Class, VoxelWindow, Coord, Dims, LabelMap, Volume};

/// Rotation angle bound in degrees, per axis.
pub const MAX_ANGLE_DEG: f64 = 20.0;
pub const SCALE_RANGE: (f64, f64) = (0.4, 1.6);
pub const DEFORM_SIGMA_RANGE: (f64, f64) = (10.0, 13.0);

/// All parameters of one fused spatial transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialParams {
    /// Rotation about x, y, z in degrees; applied as `Rz * Ry * Rx`.
    pub euler_deg: [f64; 3],
    /// Isotropic factor mapping output voxel offsets to input voxel offsets.
    pub scale: f64,
    pub deform_sigma: f64,
    /// Displacement amplitude in voxels; 0 disables deformation.
    pub deform_alpha: f64,
    pub crop_dims: Dims,
    /// Input-space position of the crop lattice center.
    pub crop_center: Coord<f64>,
}

impl SpatialParams {
    /// A pure crop centered at `crop_center`.
    pub fn crop(crop_dims: Dims, crop_center: Coord<f64>) -> Self {
        SpatialParams {
            euler_deg: [0.0; 3],
            scale: 1.0,
            deform_sigma: DEFORM_SIGMA_RANGE.0,
            deform_alpha: 0.0,
            crop_dims,
            crop_center,
        }
    }

    /// Checks structural validity and, unless `allow_extended`, the published
    /// magnitude envelope.
    pub fn validate(&self, allow_extended: bool) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.crop_dims.is_empty() {
            return bad(format!("crop dims must be >= 1, got {}", self.crop_dims));
        }
        if !self.crop_center.is_finite() || self.euler_deg.iter().any(|a| !a.is_finite()) {
            return bad("crop center and angles must be finite".into());
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad(format!("scale must be finite and > 0, got {}", self.scale));
        }
        if !(self.deform_alpha.is_finite() && self.deform_alpha >= 0.0) {
            return bad(format!("deform alpha must be >= 0, got {}", self.deform_alpha));
        }
        if self.deform_alpha > 0.0 && (self.deform_sigma.is_nan() || self.deform_sigma <= 0.0) {
            return bad(format!("deform sigma must be > 0, got {}", self.deform_sigma));
        }
        if allow_extended {
            return Ok(());
        }
        if self.euler_deg.iter().any(|a| a.abs() > MAX_ANGLE_DEG) {
            return bad(format!("angles {:?} exceed +-{MAX_ANGLE_DEG} degrees", self.euler_deg));
        }
        if self.scale < SCALE_RANGE.0 || self.scale > SCALE_RANGE.1 {
            return bad(format!("scale {} outside {SCALE_RANGE:?}", self.scale));
        }
        if self.deform_alpha > 0.0
            && (self.deform_sigma < DEFORM_SIGMA_RANGE.0 || self.deform_sigma > DEFORM_SIGMA_RANGE.1)
        {
            return bad(format!(
                "deform sigma {} outside {DEFORM_SIGMA_RANGE:?}",
                self.deform_sigma
            ));
        }
        Ok(())
    }

    /// Center of the output crop lattice, `(dims - 1) / 2`.
    pub fn lattice_center(&self) -> [f64; 3] {
        self.crop_dims.as_array().map(|n| (n as f64 - 1.0) / 2.0)
    }
}

/// `Rz * Ry * Rx` for angles in degrees.
pub fn rotation_matrix(euler_deg: [f64; 3]) -> [[f64; 3]; 3] {
    let [ax, ay, az] = euler_deg.map(f64::to_radians);
    let (sx, cx) = ax.sin_cos();
    let (sy, cy) = ay.sin_cos();
    let (sz, cz) = az.sin_cos();
    let rx = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let rz = [[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]];
    matmul(&rz, &matmul(&ry, &rx))
}

fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Per-voxel displacement over the crop lattice, in input voxels.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField<T> {
    dims: Dims,
    /// x, y, z components, each in x-fastest voxel order.
    components: [Vec<T>; 3],
}

impl<T: Real> DisplacementField<T> {
    pub fn zeros(dims: Dims) -> Self {
        DisplacementField {
            dims,
            components: std::array::from_fn(|_| vec![T::zero(); dims.len()]),
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn component(&self, axis: usize) -> &[T] {
        &self.components[axis]
    }

    #[inline]
    pub fn at(&self, index: usize) -> [T; 3] {
        [0, 1, 2].map(|a| self.components[a][index])
    }
}

/// Smoothed random displacement field.
///
/// Each component is filled with standard normal draws in voxel order
/// (x component first), smoothed by the separable Gaussian of `sigma`, and
/// scaled by `alpha`. `alpha == 0` returns the zero field without drawing.
pub fn make_displacement_field<T: Real, R: Rng + ?Sized>(
    crop_dims: Dims,
    sigma: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<DisplacementField<T>> {
    if crop_dims.is_empty() {
        return Err(Error::InvalidParameter(format!("empty field dims {crop_dims}")));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("deform alpha must be >= 0, got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(DisplacementField::zeros(crop_dims));
    }
    let a = T::of(alpha);
    let mut components: [Vec<T>; 3] = Default::default();
    for c in components.iter_mut() {
        let raw: Vec<T> = (0..crop_dims.len()).map(|_| T::standard_normal(rng)).collect();
        *c = blur_separable(&raw, crop_dims, sigma)?
            .into_iter()
            .map(|v| v * a)
            .collect();
    }
    Ok(DisplacementField {
        dims: crop_dims,
        components,
    })
}

/// Inclusive integer box of input voxels, `lo[a] <= hi[a]` on every axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cuboid {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Cuboid {
    pub fn dims(&self) -> Dims {
        Dims::from([0, 1, 2].map(|a| self.hi[a] - self.lo[a] + 1))
    }

    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let p = [x, y, z];
        (0..3).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }
}

/// Source coordinates for every output voxel plus their bounding cuboid.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpGrid<T> {
    dims: Dims,
    input_dims: Dims,
    coords: Vec<Coord<T>>,
    cuboid: Option<Cuboid>,
}

impl<T: Real> WarpGrid<T> {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn input_dims(&self) -> Dims {
        self.input_dims
    }

    pub fn coords(&self) -> &[Coord<T>] {
        &self.coords
    }

    /// `None` when no source coordinate touches the input grid.
    pub fn cuboid(&self) -> Option<Cuboid> {
        self.cuboid
    }
}

/// Bounding cuboid of `coords`: `floor(min) - 1 ..= ceil(max) + 1`, clipped.
pub(crate) fn bounding_cuboid<T: Real>(coords: &[Coord<T>], input_dims: Dims) -> Option<Cuboid> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in coords {
        for (a, v) in [c.x, c.y, c.z].into_iter().enumerate() {
            let v = v.to_f64_lossy();
            lo[a] = lo[a].min(v);
            hi[a] = hi[a].max(v);
        }
    }
    let n = input_dims.as_array();
    let mut out = Cuboid { lo: [0; 3], hi: [0; 3] };
    for a in 0..3 {
        if !(lo[a].is_finite() && hi[a].is_finite()) {
            return None;
        }
        let l = (lo[a].floor() - 1.0).max(0.0);
        let h = (hi[a].ceil() + 1.0).min(n[a] as f64 - 1.0);
        if l > h {
            return None;
        }
        out.lo[a] = l as usize;
        out.hi[a] = h as usize;
    }
    Some(out)
}

/// Builds the fused grid: for output voxel `g`,
/// `src = crop_center + scale * R * (g - lattice_center) + field(g)`.
pub fn build_warp_grid<T: Real>(
    params: &SpatialParams,
    field: Option<&DisplacementField<T>>,
    input_dims: Dims,
) -> Result<WarpGrid<T>> {
    let dims = params.crop_dims;
    if let Some(f) = field {
        if f.dims() != dims {
            return Err(Error::InvalidParameter(format!(
                "displacement field {} does not match crop {dims}",
                f.dims()
            )));
        }
    }
    let r = rotation_matrix(params.euler_deg);
    let m: [[T; 3]; 3] = r.map(|row| row.map(|v| T::of(params.scale * v)));
    let lc = params.lattice_center().map(T::of);
    let cc = [params.crop_center.x, params.crop_center.y, params.crop_center.z].map(T::of);
    let plane = dims.nx * dims.ny;

    let mut coords = vec![Coord::<T>::default(); dims.len()];
    coords.par_chunks_mut(plane).enumerate().for_each(|(k, slab)| {
        let dz = T::of(k as f64) - lc[2];
        for j in 0..dims.ny {
            let dy = T::of(j as f64) - lc[1];
            for i in 0..dims.nx {
                let dx = T::of(i as f64) - lc[0];
                let mut p = [0, 1, 2].map(|a| cc[a] + (m[a][0] * dx + m[a][1] * dy + m[a][2] * dz));
                if let Some(f) = field {
                    let d = f.at(dims.index(i, j, k));
                    p = [0, 1, 2].map(|a| p[a] + d[a]);
                }
                slab[i + dims.nx * j] = Coord::new(p[0], p[1], p[2]);
            }
        }
    });
    let cuboid = bounding_cuboid(&coords, input_dims);
    Ok(WarpGrid {
        dims,
        input_dims,
        coords,
        cuboid,
    })
}

fn check_grid<T>(grid: &WarpGrid<T>, dims: Dims) -> Result<()> {
    if grid.input_dims != dims {
        return Err(Error::InvalidInput(format!(
            "warp grid built for input {} applied to {}",
            grid.input_dims, dims
        )));
    }
    Ok(())
}

/// Trilinear warp reading only the grid's cuboid; out-of-grid reads pad 0.
pub fn warp_image<T: Real>(v: &Volume<T>, grid: &WarpGrid<T>) -> Result<Volume<T>> {
    check_grid(grid, v.dims())?;
    let dims = grid.dims;
    let mut out = vec![T::zero(); dims.len()];
    if let Some(cub) = grid.cuboid {
        let cd = cub.dims();
        // compact copy of the cuboid, one contiguous x-run at a time
        let mut local = Vec::with_capacity(cd.len());
        for z in cub.lo[2]..=cub.hi[2] {
            for y in cub.lo[1]..=cub.hi[1] {
                let start = v.dims().index(cub.lo[0], y, z);
                local.extend_from_slice(&v.data()[start..start + cd.nx]);
            }
        }
        let vd = v.dims();
        let win = VoxelWindow::new(&local, cub.lo, cd);
        out.par_chunks_mut(dims.nx * dims.ny)
            .zip(grid.coords.par_chunks(dims.nx * dims.ny))
            .for_each(|(o, c)| {
                for (o, &c) in o.iter_mut().zip(c) {
                    *o = trilinear_blend(vd, c, T::zero(), &win);
                }
            });
    }
    Ok(Volume::from_parts(dims, v.spacing(), out, v.is_normalized()))
}

/// Nearest-voxel warp of a label map; out-of-grid reads background.
pub fn warp_label<T: Real>(l: &LabelMap, grid: &WarpGrid<T>) -> Result<LabelMap> {
    check_grid(grid, l.dims())?;
    let data: Vec<Class> = grid
        .coords
        .par_iter()
        .map(|&c| nearest_sample(l, c, 0))
        .collect();
    LabelMap::new(grid.dims, l.spacing(), data)
}

/// Crop placement: a uniformly drawn integer start on each axis where the
/// input is at least crop-sized, otherwise a centered (zero-padded) window.
pub fn random_crop_params<R: Rng + ?Sized>(input_dims: Dims, crop_dims: Dims, rng: &mut R) -> SpatialParams {
    let n = input_dims.as_array();
    let w = crop_dims.as_array();
    let center = [0, 1, 2].map(|a| {
        let start = if n[a] >= w[a] {
            rng.random_range(0..=n[a] - w[a]) as f64
        } else {
            -(((w[a] - n[a]) / 2) as f64)
        };
        start + (w[a] as f64 - 1.0) / 2.0
    });
    SpatialParams::crop(crop_dims, Coord::new(center[0], center[1], center[2]))
}

/// Integer start of the crop window when `params` describe a pure crop.
pub fn crop_start(params: &SpatialParams) -> Option<[isize; 3]> {
    if params.euler_deg != [0.0; 3] || params.scale != 1.0 || params.deform_alpha != 0.0 {
        return None;
    }
    let lc = params.lattice_center();
    let c = [params.crop_center.x, params.crop_center.y, params.crop_center.z];
    let s = [0, 1, 2].map(|a| c[a] - lc[a]);
    s.iter().all(|v| v.fract() == 0.0).then(|| s.map(|v| v as isize))
}

/// Axis-aligned crop with zero padding outside the input.
pub fn crop_volume<T: Real>(v: &Volume<T>, start: [isize; 3], dims: Dims) -> Volume<T> {
    let vd = v.dims();
    let mut out = Vec::with_capacity(dims.len());
    for k in 0..dims.nz as isize {
        for j in 0..dims.ny as isize {
            for i in 0..dims.nx as isize {
                let (x, y, z) = (start[0] + i, start[1] + j, start[2] + k);
                out.push(if vd.contains(x, y, z) {
                    v.get(x as usize, y as usize, z as usize)
                } else {
                    T::zero()
                });
            }
        }
    }
    Volume::from_parts(dims, v.spacing(), out, v.is_normalized())
}

/// Axis-aligned label crop with background padding.
pub fn crop_label(l: &LabelMap, start: [isize; 3], dims: Dims) -> LabelMap {
    let ld = l.dims();
    let mut out = Vec::with_capacity(dims.len());
    for k in 0..dims.nz as isize {
        for j in 0..dims.ny as isize {
            for i in 0..dims.nx as isize {
                let (x, y, z) = (start[0] + i, start[1] + j, start[2] + k);
                out.push(if ld.contains(x, y, z) {
                    l.get(x as usize, y as usize, z as usize)
                } else {
                    0
                });
            }
        }
    }
    LabelMap::new(dims, l.spacing(), out).expect("crop geometry is valid")
}
