//! Intensity-space transforms: sharpening, blurring, noise, brightness,
//! contrast (gamma) and linear perturbation.
//!
//! All of them take a normalized volume and return a normalized volume of the
//! same geometry. Labels never pass through this module.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::blur_separable;
use crate::scalar::{clamp01, Real};
use crate::volume::Volume;

/// A fully sampled intensity transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntensityMagnitude {
    Sharpen { strength: f64, base_sigma: f64 },
    Blur { sigma: f64 },
    Noise { std: f64 },
    Brightness { delta: f64 },
    Contrast { gamma: f64 },
    Perturb { scale: f64, shift: f64 },
}

impl IntensityMagnitude {
    /// Applies the transform. `rng` is only consumed by noise.
    pub fn apply<T: Real, R: Rng + ?Sized>(&self, v: &Volume<T>, rng: &mut R) -> Result<Volume<T>> {
        match *self {
            IntensityMagnitude::Sharpen {
                strength,
                base_sigma,
            } => unsharp_sharpen(v, strength, base_sigma),
            IntensityMagnitude::Blur { sigma } => gaussian_blur(v, sigma),
            IntensityMagnitude::Noise { std } => add_gaussian_noise(v, std, rng),
            IntensityMagnitude::Brightness { delta } => shift_brightness(v, delta),
            IntensityMagnitude::Contrast { gamma } => gamma_contrast(v, gamma),
            IntensityMagnitude::Perturb { scale, shift } => linear_perturb(v, scale, shift),
        }
    }
}

fn map_voxels<T: Real>(v: &Volume<T>, f: impl Fn(T) -> T) -> Volume<T> {
    let data = v.data().iter().map(|&x| f(x)).collect();
    Volume::from_parts(v.dims(), v.spacing(), data, true)
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {x}")))
    }
}

/// Separable Gaussian blur with standard deviation `sigma` voxels.
pub fn gaussian_blur<T: Real>(v: &Volume<T>, sigma: f64) -> Result<Volume<T>> {
    v.require_normalized("gaussian blur")?;
    let data = blur_separable(v.data(), v.dims(), sigma)?
        .into_iter()
        .map(clamp01)
        .collect();
    Ok(Volume::from_parts(v.dims(), v.spacing(), data, true))
}

/// Unsharp masking: `clamp(v + strength * (v - blur(v, base_sigma)), 0, 1)`.
pub fn unsharp_sharpen<T: Real>(v: &Volume<T>, strength: f64, base_sigma: f64) -> Result<Volume<T>> {
    v.require_normalized("unsharp sharpening")?;
    finite("sharpen strength", strength)?;
    if strength < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sharpen strength must be >= 0, got {strength}"
        )));
    }
    let blurred = blur_separable(v.data(), v.dims(), base_sigma)?;
    let s = T::of(strength);
    let data = v
        .data()
        .iter()
        .zip(&blurred)
        .map(|(&x, &b)| clamp01(x + s * (x - b)))
        .collect();
    Ok(Volume::from_parts(v.dims(), v.spacing(), data, true))
}

/// Adds i.i.d. `N(0, std^2)` noise, drawn in voxel order, then clamps.
pub fn add_gaussian_noise<T: Real, R: Rng + ?Sized>(
    v: &Volume<T>,
    std: f64,
    rng: &mut R,
) -> Result<Volume<T>> {
    v.require_normalized("gaussian noise")?;
    finite("noise std", std)?;
    if std < 0.0 {
        return Err(Error::InvalidParameter(format!("noise std must be >= 0, got {std}")));
    }
    let s = T::of(std);
    let data = v
        .data()
        .iter()
        .map(|&x| clamp01(x + s * T::standard_normal(rng)))
        .collect();
    Ok(Volume::from_parts(v.dims(), v.spacing(), data, true))
}

/// `clamp(v + delta, 0, 1)`.
pub fn shift_brightness<T: Real>(v: &Volume<T>, delta: f64) -> Result<Volume<T>> {
    v.require_normalized("brightness shift")?;
    finite("brightness delta", delta)?;
    let d = T::of(delta);
    Ok(map_voxels(v, |x| clamp01(x + d)))
}

/// Gamma correction `v^gamma`. Needs no clamping on `[0, 1]` input.
pub fn gamma_contrast<T: Real>(v: &Volume<T>, gamma: f64) -> Result<Volume<T>> {
    v.require_normalized("gamma contrast")?;
    finite("gamma", gamma)?;
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    let g = T::of(gamma);
    Ok(map_voxels(v, |x| x.powf(g)))
}

/// Random linear intensity map `clamp((1 + scale) v + shift, 0, 1)`.
pub fn linear_perturb<T: Real>(v: &Volume<T>, scale: f64, shift: f64) -> Result<Volume<T>> {
    v.require_normalized("linear perturbation")?;
    finite("perturb scale", scale)?;
    finite("perturb shift", shift)?;
    let a = T::one() + T::of(scale);
    let b = T::of(shift);
    Ok(map_voxels(v, |x| clamp01(a * x + b)))
}
