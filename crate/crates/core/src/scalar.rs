//! Scalar abstraction for voxel intensities.
//!
//! Every numeric routine in the crate is written against [`Real`], so the same
//! code runs on `f32` volumes (the on-disk payload type) and `f64` volumes
//! (useful for oracles and high-precision preprocessing).

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating point voxel scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Draws one standard normal variate in this precision.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from `f64`; all crate parameters are stored as `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to any Real")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Clamps into the closed unit interval. NaN maps to 0.
#[inline]
pub fn clamp01<T: Real>(x: T) -> T {
    if x > T::one() {
        T::one()
    } else if x >= T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Interpolates `a + t (b - a)`, kept inside the hull of `a` and `b`.
///
/// This form returns `a` exactly for `t == 0` and for `a == b`, which the
/// identity and constant-volume guarantees rely on.
#[inline]
pub fn lerp<T: Real>(a: T, b: T, t: T) -> T {
    let v = a + t * (b - a);
    // plain selects rather than a branch on the order of a and b: the
    // order is data dependent and mispredicts badly in the warp loop
    let lo = if a < b { a } else { b };
    let hi = if a < b { b } else { a };
    let v = if v < lo { lo } else { v };
    if v > hi {
        hi
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp01_handles_edges() {
        assert_eq!(clamp01(1.5f32), 1.0);
        assert_eq!(clamp01(-0.2f64), 0.0);
        assert_eq!(clamp01(0.3f32), 0.3);
        assert_eq!(clamp01(f64::NAN), 0.0);
    }

    #[test]
    fn lerp_is_exact_at_endpoints_and_constants() {
        assert_eq!(lerp(0.7f32, 0.2, 0.0), 0.7);
        assert_eq!(lerp(0.7f32, 0.7, 0.37), 0.7);
        assert_eq!(lerp(0.0f64, 1.0, 0.5), 0.5);
    }
}
