//! Volume and label data model plus the sampling primitives every other
//! module builds on.
//!
//! Voxel centers sit at integer coordinates, so an axis with `n` voxels spans
//! `[0, n - 1]` in continuous voxel space. Data is stored x-fastest:
//! `index = x + nx * (y + ny * z)`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lerp, Real};

/// Non-negative segmentation class; 0 is background.
pub type Class = u16;

/// Millimeters per voxel along x, y, z.
pub type Spacing = [f64; 3];

/// Voxel counts along each axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub const fn cube(n: usize) -> Self {
        Dims::new(n, n, n)
    }

    pub const fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub const fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.nx * (y + self.ny * z)
    }

    #[inline]
    pub fn contains(&self, x: isize, y: isize, z: isize) -> bool {
        x >= 0
            && y >= 0
            && z >= 0
            && (x as usize) < self.nx
            && (y as usize) < self.ny
            && (z as usize) < self.nz
    }
}

impl From<[usize; 3]> for Dims {
    fn from(a: [usize; 3]) -> Self {
        Dims::new(a[0], a[1], a[2])
    }
}

impl From<Dims> for [usize; 3] {
    fn from(d: Dims) -> Self {
        d.as_array()
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// A continuous position in voxel space. May lie outside the grid.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Coord<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Coord<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Coord { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

fn check_geometry(dims: Dims, spacing: Spacing, len: usize) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::InvalidInput(format!("empty volume dims {dims}")));
    }
    if len != dims.len() {
        return Err(Error::InvalidInput(format!(
            "data length {len} does not match dims {dims} ({} voxels)",
            dims.len()
        )));
    }
    if spacing.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "spacing must be finite and positive, got {spacing:?}"
        )));
    }
    Ok(())
}

/// A 3D scalar image with physical spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume<T> {
    dims: Dims,
    spacing: Spacing,
    data: Vec<T>,
    normalized: bool,
}

impl<T: Real> Volume<T> {
    /// Builds a volume, validating geometry and requiring finite values.
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<T>) -> Result<Self> {
        check_geometry(dims, spacing, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at voxel {i}")));
        }
        Ok(Volume {
            dims,
            spacing,
            data,
            normalized: false,
        })
    }

    pub fn filled(dims: Dims, spacing: Spacing, value: T) -> Result<Self> {
        Self::new(dims, spacing, vec![value; dims.len()])
    }

    /// Builds a volume and asserts every value lies in `[0, 1]`.
    pub fn new_normalized(dims: Dims, spacing: Spacing, data: Vec<T>) -> Result<Self> {
        Self::new(dims, spacing, data)?.into_normalized()
    }

    /// Sets the normalized flag after checking the `[0, 1]` range.
    pub fn into_normalized(mut self) -> Result<Self> {
        if let Some(i) = self
            .data
            .iter()
            .position(|v| *v < T::zero() || *v > T::one())
        {
            return Err(Error::ContractViolation(format!(
                "voxel {i} has value {} outside [0, 1]",
                self.data[i]
            )));
        }
        self.normalized = true;
        Ok(self)
    }

    /// Internal constructor for outputs whose invariants hold by construction.
    pub(crate) fn from_parts(dims: Dims, spacing: Spacing, data: Vec<T>, normalized: bool) -> Self {
        debug_assert_eq!(data.len(), dims.len());
        Volume {
            dims,
            spacing,
            data,
            normalized,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.data[self.dims.index(x, y, z)]
    }

    pub fn min_max(&self) -> (T, T) {
        self.data.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    }

    /// Converts the scalar type, keeping geometry and the normalized flag.
    pub fn cast<U: Real>(&self) -> Volume<U> {
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            data: self.data.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
            normalized: self.normalized,
        }
    }

    pub(crate) fn require_normalized(&self, op: &str) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(Error::ContractViolation(format!(
                "{op} requires a volume normalized to [0, 1]; run intensity normalization first"
            )))
        }
    }
}

/// A 3D class map aligned with a [`Volume`].
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMap {
    dims: Dims,
    spacing: Spacing,
    data: Vec<Class>,
    classes: BTreeSet<Class>,
}

impl LabelMap {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<Class>) -> Result<Self> {
        check_geometry(dims, spacing, data.len())?;
        let classes = data.iter().copied().collect();
        Ok(LabelMap {
            dims,
            spacing,
            data,
            classes,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn data(&self) -> &[Class] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Class> {
        self.data
    }

    /// The set of classes present when the map was built.
    pub fn classes(&self) -> &BTreeSet<Class> {
        &self.classes
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> Class {
        self.data[self.dims.index(x, y, z)]
    }

    /// Errors unless dims and spacing match the companion image.
    pub fn check_aligned<T: Real>(&self, image: &Volume<T>) -> Result<()> {
        if self.dims != image.dims() || self.spacing != image.spacing() {
            return Err(Error::InvalidInput(format!(
                "label {} @ {:?} mm is not aligned with image {} @ {:?} mm",
                self.dims,
                self.spacing,
                image.dims(),
                image.spacing()
            )));
        }
        Ok(())
    }
}

/// `(floor(c), c - floor(c))`, or `None` for non-finite or huge `c`.
///
/// Avoids a libm `floor` call; the fractional part is exact either way.
#[inline]
fn floor_index<T: Real>(c: T) -> Option<(isize, T)> {
    const LIMIT: f64 = (1u64 << 52) as f64;
    let cf = c.to_f64_lossy();
    if cf.is_nan() || cf.abs() >= LIMIT {
        return None;
    }
    let mut i = cf as isize;
    if (i as f64) > cf {
        i -= 1;
    }
    Some((i, c - T::of(i as f64)))
}

/// Read access to a box of voxels stored x-fastest: either a whole volume or
/// a compact copy of a cuboid whose first voxel is `origin`.
#[derive(Clone, Copy)]
pub(crate) struct VoxelWindow<'a, T> {
    data: &'a [T],
    origin: [usize; 3],
    nx: usize,
    plane: usize,
}

impl<'a, T: Copy> VoxelWindow<'a, T> {
    pub(crate) fn full(data: &'a [T], dims: Dims) -> Self {
        Self::new(data, [0; 3], dims)
    }

    pub(crate) fn new(data: &'a [T], origin: [usize; 3], dims: Dims) -> Self {
        debug_assert_eq!(data.len(), dims.len());
        VoxelWindow {
            data,
            origin,
            nx: dims.nx,
            plane: dims.nx * dims.ny,
        }
    }

    #[inline]
    fn offset(&self, x: usize, y: usize, z: usize) -> usize {
        (x - self.origin[0]) + self.nx * (y - self.origin[1]) + self.plane * (z - self.origin[2])
    }

    #[inline]
    fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.data[self.offset(x, y, z)]
    }
}

/// Trilinear blend around `c`, reading voxels through `win`.
///
/// `dims` are the full input dims and decide which neighbors are in-grid;
/// the rest contribute `pad`. Both the full-volume and the cuboid-restricted
/// warp go through this one function so that their arithmetic is identical.
#[inline]
pub(crate) fn trilinear_blend<T: Real>(dims: Dims, c: Coord<T>, pad: T, win: &VoxelWindow<'_, T>) -> T {
    let (Some((x0, tx)), Some((y0, ty)), Some((z0, tz))) =
        (floor_index(c.x), floor_index(c.y), floor_index(c.z))
    else {
        return pad;
    };
    let [nx, ny, nz] = dims.as_array().map(|n| n as isize);
    if x0 < -1 || y0 < -1 || z0 < -1 || x0 >= nx || y0 >= ny || z0 >= nz {
        return pad;
    }
    if x0 >= 0 && y0 >= 0 && z0 >= 0 && x0 + 1 < nx && y0 + 1 < ny && z0 + 1 < nz {
        // all eight neighbors in-grid: one offset, fixed strides
        let (sy, sz) = (win.nx, win.plane);
        let i = win.offset(x0 as usize, y0 as usize, z0 as usize);
        let d = &win.data[i..=i + sz + sy + 1];
        let c00 = lerp(d[0], d[1], tx);
        let c10 = lerp(d[sy], d[sy + 1], tx);
        let c01 = lerp(d[sz], d[sz + 1], tx);
        let c11 = lerp(d[sz + sy], d[sz + sy + 1], tx);
        return lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz);
    }
    let at = |x: isize, y: isize, z: isize| {
        if dims.contains(x, y, z) {
            win.get(x as usize, y as usize, z as usize)
        } else {
            pad
        }
    };
    let c00 = lerp(at(x0, y0, z0), at(x0 + 1, y0, z0), tx);
    let c10 = lerp(at(x0, y0 + 1, z0), at(x0 + 1, y0 + 1, z0), tx);
    let c01 = lerp(at(x0, y0, z0 + 1), at(x0 + 1, y0, z0 + 1), tx);
    let c11 = lerp(at(x0, y0 + 1, z0 + 1), at(x0 + 1, y0 + 1, z0 + 1), tx);
    let c0 = lerp(c00, c10, ty);
    let c1 = lerp(c01, c11, ty);
    lerp(c0, c1, tz)
}

/// Trilinear interpolation; neighbors outside the grid contribute `pad_value`.
pub fn trilinear_sample<T: Real>(v: &Volume<T>, c: Coord<T>, pad_value: T) -> T {
    let dims = v.dims;
    trilinear_blend(dims, c, pad_value, &VoxelWindow::full(&v.data, dims))
}

#[inline]
pub(crate) fn round_index<T: Real>(c: T) -> Option<isize> {
    c.round().to_isize()
}

/// Nearest-voxel lookup (ties round away from zero); outside returns `pad_class`.
pub fn nearest_sample<T: Real>(l: &LabelMap, c: Coord<T>, pad_class: Class) -> Class {
    match (round_index(c.x), round_index(c.y), round_index(c.z)) {
        (Some(x), Some(y), Some(z)) if l.dims.contains(x, y, z) => {
            l.data[l.dims.index(x as usize, y as usize, z as usize)]
        }
        _ => pad_class,
    }
}

/// Output dims and per-axis source step for isotropic resampling.
fn resample_geometry(dims: Dims, spacing: Spacing, target: f64) -> Result<(Dims, [f64; 3])> {
    if !target.is_finite() || target <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "target spacing must be finite and positive, got {target}"
        )));
    }
    check_geometry(dims, spacing, dims.len())?;
    let n = dims.as_array();
    let out = [0, 1, 2].map(|a| ((n[a] as f64 * spacing[a] / target).round() as usize).max(1));
    let step = [0, 1, 2].map(|a| target / spacing[a]);
    Ok((Dims::from(out), step))
}

/// Source coordinate of output index `j` along an axis, clamped to the grid.
#[inline]
fn resample_source<T: Real>(j: usize, step: f64, n: usize) -> T {
    let c = T::of(j as f64 * step);
    c.max(T::zero()).min(T::of((n - 1) as f64))
}

/// Resamples to `(t, t, t)` mm spacing with trilinear interpolation.
///
/// Output voxel `j` sits at physical position `j * t`, which is input voxel
/// coordinate `j * t / spacing`. Positions past the last input voxel are
/// clamped onto it, so resampling never introduces padding values.
pub fn resample_isotropic<T: Real>(v: &Volume<T>, target_spacing_mm: f64) -> Result<Volume<T>> {
    let (out_dims, step) = resample_geometry(v.dims, v.spacing, target_spacing_mm)?;
    let dims = v.dims;
    let plane = out_dims.nx * out_dims.ny;
    let win = VoxelWindow::full(&v.data, dims);
    let mut out = vec![T::zero(); out_dims.len()];
    out.par_chunks_mut(plane).enumerate().for_each(|(k, slab)| {
        let cz = resample_source::<T>(k, step[2], dims.nz);
        for j in 0..out_dims.ny {
            let cy = resample_source::<T>(j, step[1], dims.ny);
            for i in 0..out_dims.nx {
                let cx = resample_source::<T>(i, step[0], dims.nx);
                // coordinates are clamped in-grid, so the pad value is never read
                slab[i + out_dims.nx * j] = trilinear_blend(dims, Coord::new(cx, cy, cz), T::zero(), &win);
            }
        }
    });
    Ok(Volume::from_parts(
        out_dims,
        [target_spacing_mm; 3],
        out,
        v.normalized,
    ))
}

/// Resamples a label map onto the same grid as [`resample_isotropic`] using
/// nearest-voxel lookup.
pub fn resample_label_isotropic(l: &LabelMap, target_spacing_mm: f64) -> Result<LabelMap> {
    let (out_dims, step) = resample_geometry(l.dims, l.spacing, target_spacing_mm)?;
    let mut out = Vec::with_capacity(out_dims.len());
    for k in 0..out_dims.nz {
        let cz = resample_source::<f64>(k, step[2], l.dims.nz);
        for j in 0..out_dims.ny {
            let cy = resample_source::<f64>(j, step[1], l.dims.ny);
            for i in 0..out_dims.nx {
                let cx = resample_source::<f64>(i, step[0], l.dims.nx);
                out.push(nearest_sample(l, Coord::new(cx, cy, cz), 0));
            }
        }
    }
    LabelMap::new(out_dims, [target_spacing_mm; 3], out)
}

/// Outcome flag of [`normalize_intensity`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalizeStatus {
    Ok,
    /// The input was constant; the output is all zeros.
    ConstantInput,
}

/// Min-max normalization of the whole volume onto `[0, 1]`.
pub fn normalize_intensity<T: Real>(v: &Volume<T>) -> (Volume<T>, NormalizeStatus) {
    let (lo, hi) = v.min_max();
    if hi <= lo {
        let zeros = vec![T::zero(); v.data.len()];
        return (
            Volume::from_parts(v.dims, v.spacing, zeros, true),
            NormalizeStatus::ConstantInput,
        );
    }
    let span = hi - lo;
    let data = v.data.iter().map(|&x| (x - lo) / span).collect();
    (
        Volume::from_parts(v.dims, v.spacing, data, true),
        NormalizeStatus::Ok,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_volume(dims: Dims, spacing: Spacing, seed: u64) -> Volume<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..dims.len()).map(|_| rng.random::<f64>()).collect();
        Volume::new(dims, spacing, data).unwrap()
    }

    /// Direct trilinear with the weight-product formula, independent of the
    /// lerp cascade used by the library.
    fn oracle_trilinear(v: &Volume<f64>, c: [f64; 3], clamp_edges: bool, pad: f64) -> f64 {
        let d = v.dims().as_array();
        let mut acc = 0.0;
        let base = c.map(f64::floor);
        for corner in 0..8 {
            let mut w = 1.0;
            let mut idx = [0isize; 3];
            for a in 0..3 {
                let bit = (corner >> a) & 1;
                let t = c[a] - base[a];
                w *= if bit == 1 { t } else { 1.0 - t };
                idx[a] = base[a] as isize + bit as isize;
                if clamp_edges {
                    idx[a] = idx[a].clamp(0, d[a] as isize - 1);
                }
            }
            let inside = (0..3).all(|a| idx[a] >= 0 && idx[a] < d[a] as isize);
            let val = if inside {
                v.get(idx[0] as usize, idx[1] as usize, idx[2] as usize)
            } else {
                pad
            };
            acc += w * val;
        }
        acc
    }

    fn oracle_resample(v: &Volume<f64>, t: f64) -> Vec<f64> {
        let d = v.dims().as_array();
        let s = v.spacing();
        let out: Vec<usize> = (0..3)
            .map(|a| ((d[a] as f64 * s[a] / t).round() as usize).max(1))
            .collect();
        let mut res = Vec::new();
        for k in 0..out[2] {
            for j in 0..out[1] {
                for i in 0..out[0] {
                    let c = [i, j, k]
                        .iter()
                        .enumerate()
                        .map(|(a, &n)| (n as f64 * t / s[a]).min((d[a] - 1) as f64))
                        .collect::<Vec<_>>();
                    res.push(oracle_trilinear(v, [c[0], c[1], c[2]], true, 0.0));
                }
            }
        }
        res
    }

    #[test]
    fn resample_constant_stays_constant() {
        let v = Volume::filled(Dims::new(5, 7, 3), [1.3, 0.7, 2.5], 0.7f32).unwrap();
        let r = resample_isotropic(&v, 1.0).unwrap();
        assert!(r.data().iter().all(|&x| x == 0.7));
        assert_eq!(r.spacing(), [1.0; 3]);
    }

    #[test]
    fn resample_dims_follow_physical_extent() {
        let v = Volume::filled(Dims::cube(4), [2.0; 3], 0.1f64).unwrap();
        let r = resample_isotropic(&v, 1.0).unwrap();
        assert_eq!(r.dims(), Dims::cube(8));
        assert_eq!(r.spacing(), [1.0, 1.0, 1.0]);
        // tiny extents clamp to at least one voxel
        let v = Volume::filled(Dims::new(1, 2, 2), [0.1, 1.0, 1.0], 0.1f64).unwrap();
        assert_eq!(resample_isotropic(&v, 1.0).unwrap().dims().nx, 1);
    }

    #[test]
    fn resample_matches_direct_oracle() {
        let v = random_volume(Dims::cube(16), [1.5, 1.0, 1.0], 7);
        let r = resample_isotropic(&v, 1.0).unwrap();
        assert_eq!(r.dims(), Dims::new(24, 16, 16));
        let expect = oracle_resample(&v, 1.0);
        for (a, b) in r.data().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn resample_rejects_bad_target() {
        let v = Volume::filled(Dims::cube(2), [1.0; 3], 0.0f32).unwrap();
        assert!(matches!(resample_isotropic(&v, 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(resample_isotropic(&v, f64::NAN), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn volume_rejects_bad_geometry() {
        assert!(Volume::new(Dims::cube(2), [1.0; 3], vec![0.0f32; 7]).is_err());
        assert!(Volume::new(Dims::cube(0), [1.0; 3], Vec::<f32>::new()).is_err());
        assert!(Volume::new(Dims::cube(1), [1.0, 0.0, 1.0], vec![0.0f32]).is_err());
        assert!(Volume::new(Dims::cube(1), [1.0, f64::INFINITY, 1.0], vec![0.0f32]).is_err());
        assert!(Volume::new(Dims::cube(1), [1.0; 3], vec![f32::NAN]).is_err());
        assert!(Volume::new_normalized(Dims::cube(1), [1.0; 3], vec![1.5f32]).is_err());
    }

    #[test]
    fn resample_label_uses_nearest() {
        let l = LabelMap::new(Dims::new(2, 1, 1), [2.0, 1.0, 1.0], vec![3, 5]).unwrap();
        let r = resample_label_isotropic(&l, 1.0).unwrap();
        assert_eq!(r.dims(), Dims::new(4, 1, 1));
        // coords 0, 0.5, 1, 1.5(clamped to 1)
        assert_eq!(r.data(), &[3, 5, 5, 5]);
    }

    #[test]
    fn normalize_examples() {
        let v = Volume::new(Dims::new(3, 1, 1), [1.0; 3], vec![2.0f64, 4.0, 6.0]).unwrap();
        let (n, s) = normalize_intensity(&v);
        assert_eq!(n.data(), &[0.0, 0.5, 1.0]);
        assert!(n.is_normalized());
        assert_eq!(s, NormalizeStatus::Ok);

        let c = Volume::filled(Dims::cube(3), [1.0; 3], 3.3f32).unwrap();
        let (n, s) = normalize_intensity(&c);
        assert!(n.data().iter().all(|&x| x == 0.0));
        assert!(n.is_normalized());
        assert_eq!(s, NormalizeStatus::ConstantInput);

        let u = Volume::new(Dims::new(4, 1, 1), [1.0; 3], vec![0.0f32, 0.25, 1.0, 0.6]).unwrap();
        let (n, _) = normalize_intensity(&u);
        assert_eq!(n.data(), u.data());
        assert_eq!(n.dims(), u.dims());
    }

    #[test]
    fn trilinear_examples() {
        let mut v = random_volume(Dims::new(4, 5, 3), [1.0; 3], 3);
        assert_eq!(trilinear_sample(&v, Coord::new(2.0, 3.0, 1.0), 0.0), v.get(2, 3, 1));

        let mut data = vec![0.0; 8];
        data[1] = 1.0; // voxel (1,0,0)
        v = Volume::new(Dims::cube(2), [1.0; 3], data).unwrap();
        assert_eq!(trilinear_sample(&v, Coord::new(0.5, 0.0, 0.0), 0.0), 0.5);

        assert_eq!(trilinear_sample(&v, Coord::new(-10.0, 0.0, 0.0), 0.0), 0.0);
        assert_eq!(trilinear_sample(&v, Coord::new(1.0, 1.0, 9.0), 0.25), 0.25);
    }

    #[test]
    fn nearest_examples() {
        let data: Vec<Class> = (0..27).collect();
        let l = LabelMap::new(Dims::cube(3), [1.0; 3], data).unwrap();
        assert_eq!(nearest_sample(&l, Coord::new(1.4, 2.0, 0.0), 0), l.get(1, 2, 0));
        assert_eq!(nearest_sample(&l, Coord::new(-5.0, 0.0, 0.0), 0), 0);
        // ties round away from zero
        assert_eq!(nearest_sample(&l, Coord::new(0.5, 0.0, 0.0), 99), l.get(1, 0, 0));
        assert_eq!(nearest_sample(&l, Coord::new(2.5, 0.0, 0.0), 99), 99);
        assert_eq!(nearest_sample(&l, Coord::new(-0.4, 0.0, 0.0), 99), l.get(0, 0, 0));
    }

    #[test]
    fn nearest_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data: Vec<Class> = (0..512).map(|_| rng.random_range(0..6)).collect();
        let l = LabelMap::new(Dims::cube(8), [1.0; 3], data).unwrap();
        for _ in 0..100 {
            let c = [0; 3].map(|_| rng.random_range(0.0..7.0f64));
            let mut best = (f64::INFINITY, 0);
            for z in 0..8 {
                for y in 0..8 {
                    for x in 0..8 {
                        let d2 = (c[0] - x as f64).powi(2)
                            + (c[1] - y as f64).powi(2)
                            + (c[2] - z as f64).powi(2);
                        if d2 < best.0 {
                            best = (d2, l.get(x, y, z));
                        }
                    }
                }
            }
            assert_eq!(nearest_sample(&l, Coord::new(c[0], c[1], c[2]), 0), best.1);
        }
    }

    #[test]
    fn label_alignment_check() {
        let v = Volume::filled(Dims::cube(2), [1.0; 3], 0.0f32).unwrap();
        let l = LabelMap::new(Dims::cube(2), [1.0; 3], vec![0; 8]).unwrap();
        assert!(l.check_aligned(&v).is_ok());
        let l = LabelMap::new(Dims::cube(2), [2.0; 3], vec![0; 8]).unwrap();
        assert!(l.check_aligned(&v).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn prop_resample_matches_oracle(
            nx in 2usize..10, ny in 2usize..10, nz in 2usize..10,
            sx in 0.5f64..2.5, sy in 0.5f64..2.5, sz in 0.5f64..2.5,
            seed in any::<u64>(),
        ) {
            let v = random_volume(Dims::new(nx, ny, nz), [sx, sy, sz], seed);
            let r = resample_isotropic(&v, 1.0).unwrap();
            let expect = oracle_resample(&v, 1.0);
            prop_assert_eq!(r.data().len(), expect.len());
            for (a, b) in r.data().iter().zip(&expect) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }

        #[test]
        fn prop_normalize_in_unit_range(data in prop::collection::vec(-1e3f64..1e3, 1..200)) {
            let n = data.len();
            let v = Volume::new(Dims::new(n, 1, 1), [1.0; 3], data).unwrap();
            let (out, _) = normalize_intensity(&v);
            prop_assert!(out.data().iter().all(|&x| (0.0..=1.0).contains(&x)));
        }

        #[test]
        fn prop_trilinear_within_neighbor_hull(
            seed in any::<u64>(),
            cx in -2.0f64..6.0, cy in -2.0f64..6.0, cz in -2.0f64..6.0,
            pad in 0.0f64..1.0,
        ) {
            let v = random_volume(Dims::cube(5), [1.0; 3], seed);
            let got = trilinear_sample(&v, Coord::new(cx, cy, cz), pad);
            let c = [cx, cy, cz];
            let base = c.map(|x| x.floor() as isize);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for corner in 0..8 {
                let idx: Vec<isize> = (0..3).map(|a| base[a] + ((corner >> a) & 1) as isize).collect();
                let val = if Dims::cube(5).contains(idx[0], idx[1], idx[2]) {
                    v.get(idx[0] as usize, idx[1] as usize, idx[2] as usize)
                } else {
                    pad
                };
                lo = lo.min(val);
                hi = hi.max(val);
            }
            prop_assert!(got >= lo && got <= hi);
            let oracle = oracle_trilinear(&v, c, false, pad);
            prop_assert!((got - oracle).abs() < 1e-12);
        }

        #[test]
        fn prop_nearest_returns_present_class(
            seed in any::<u64>(),
            cx in -3.0f64..8.0, cy in -3.0f64..8.0, cz in -3.0f64..8.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<Class> = (0..125).map(|_| rng.random_range(1..4)).collect();
            let l = LabelMap::new(Dims::cube(5), [1.0; 3], data).unwrap();
            let got = nearest_sample(&l, Coord::new(cx, cy, cz), 0);
            prop_assert!(got == 0 || l.classes().contains(&got));
        }
    }
}
