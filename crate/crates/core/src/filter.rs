//! Separable Gaussian smoothing of 3D buffers.
//!
//! Shared by the blur and unsharp transforms and by displacement-field
//! smoothing. The kernel is truncated at `ceil(3 sigma)` and, near borders,
//! renormalized over the taps that fall inside the grid. Because the in-grid
//! tap region is always a box, renormalizing each 1D pass is equivalent to
//! renormalizing the dense 3D kernel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::Dims;

/// A normalized, truncated 1D Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    weights: Vec<f64>,
}

impl GaussianKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gaussian sigma must be finite and > 0, got {sigma}"
            )));
        }
        let radius = (3.0 * sigma).ceil() as usize;
        let raw: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let k = i as f64 - radius as f64;
                (-k * k / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        Ok(GaussianKernel {
            sigma,
            radius,
            weights: raw.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Weights for offsets `-radius..=radius`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// In-grid tap range (as kernel indices) and weight sum for position `p`
    /// on an axis of length `n`.
    fn taps(&self, p: usize, n: usize) -> (usize, usize, f64) {
        let r = self.radius;
        let first = r.saturating_sub(p);
        let last = (2 * r).min(r + n - 1 - p);
        let norm = self.weights[first..=last].iter().sum();
        (first, last, norm)
    }
}

fn hull<T: Real>(data: &[T]) -> (T, T) {
    data.iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// One border-renormalized pass along `axis` (0 = x, 1 = y, 2 = z).
fn blur_axis<T: Real>(input: &[T], dims: Dims, kernel: &GaussianKernel, axis: usize) -> Vec<T> {
    let [nx, ny, nz] = dims.as_array();
    let n = dims.as_array()[axis];
    let r = kernel.radius;
    let w: Vec<T> = kernel.weights.iter().map(|&x| T::of(x)).collect();
    let taps: Vec<(usize, usize, T)> = (0..n)
        .map(|p| {
            let (a, b, norm) = kernel.taps(p, n);
            (a, b, T::of(norm))
        })
        .collect();
    let (lo, hi) = hull(input);
    let plane = nx * ny;
    let mut out = vec![T::zero(); input.len()];

    out.par_chunks_mut(plane).enumerate().for_each(|(z, slab)| match axis {
        0 => {
            for y in 0..ny {
                let row = &input[nx * (y + ny * z)..][..nx];
                for (x, o) in slab[nx * y..][..nx].iter_mut().enumerate() {
                    let (a, b, norm) = taps[x];
                    let mut acc = T::zero();
                    for k in a..=b {
                        acc = acc + w[k] * row[x + k - r];
                    }
                    *o = (acc / norm).max(lo).min(hi);
                }
            }
        }
        1 => {
            let src = &input[plane * z..][..plane];
            let mut acc = vec![T::zero(); nx];
            for y in 0..ny {
                let (a, b, norm) = taps[y];
                acc.iter_mut().for_each(|v| *v = T::zero());
                for k in a..=b {
                    let row = &src[nx * (y + k - r)..][..nx];
                    for (s, &v) in acc.iter_mut().zip(row) {
                        *s = *s + w[k] * v;
                    }
                }
                for (o, &s) in slab[nx * y..][..nx].iter_mut().zip(&acc) {
                    *o = (s / norm).max(lo).min(hi);
                }
            }
        }
        _ => {
            debug_assert!(z < nz);
            let (a, b, norm) = taps[z];
            let mut acc = vec![T::zero(); plane];
            for k in a..=b {
                let src = &input[plane * (z + k - r)..][..plane];
                for (s, &v) in acc.iter_mut().zip(src) {
                    *s = *s + w[k] * v;
                }
            }
            for (o, &s) in slab.iter_mut().zip(&acc) {
                *o = (s / norm).max(lo).min(hi);
            }
        }
    });
    out
}

/// Separable 3D Gaussian smoothing (x, then y, then z).
///
/// Each pass is clamped to the value hull of its input, so the result never
/// leaves the hull of the original data. Results do not depend on the number
/// of worker threads.
pub fn blur_separable<T: Real>(data: &[T], dims: Dims, sigma: f64) -> Result<Vec<T>> {
    if data.len() != dims.len() || dims.is_empty() {
        return Err(Error::InvalidInput(format!(
            "buffer of {} values does not match dims {dims}",
            data.len()
        )));
    }
    let kernel = GaussianKernel::new(sigma)?;
    let x = blur_axis(data, dims, &kernel, 0);
    let y = blur_axis(&x, dims, &kernel, 1);
    Ok(blur_axis(&y, dims, &kernel, 2))
}
