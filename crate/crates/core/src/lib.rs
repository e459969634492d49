//! Stacked 3D augmentation for volumetric segmentation data.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom of this file name the common concrete instantiations.

pub mod error;
pub mod filter;
pub mod intensity;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod spatial;
pub mod volume;

pub use error::{Error, Result};
pub use intensity::{
    add_gaussian_noise, gamma_contrast, gaussian_blur, linear_perturb, shift_brightness,
    unsharp_sharpen, IntensityMagnitude,
};
pub use pipeline::{
    apply, default_dst_config, draw_sample, replay, sample_params, Augmented, PipelineConfig,
    Preset, Range, SampleDraw, TransformDraw, TransformKind, TransformSpec,
};
pub use rng::{derive_substream, Lane, Substream};
pub use scalar::Real;
pub use spatial::{
    build_warp_grid, make_displacement_field, warp_image, warp_label, Cuboid, DisplacementField,
    SpatialParams, WarpGrid,
};
pub use volume::{
    nearest_sample, normalize_intensity, resample_isotropic, resample_label_isotropic,
    trilinear_sample, Class, Coord, Dims, LabelMap, NormalizeStatus, Spacing, Volume,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type VolumeF32 = Volume<f32>;
pub type VolumeF64 = Volume<f64>;
pub type CoordF32 = Coord<f32>;
pub type CoordF64 = Coord<f64>;
pub type WarpGridF32 = WarpGrid<f32>;
pub type WarpGridF64 = WarpGrid<f64>;
pub type DisplacementFieldF32 = DisplacementField<f32>;
pub type DisplacementFieldF64 = DisplacementField<f64>;
pub type AugmentedF32 = Augmented<f32>;
pub type AugmentedF64 = Augmented<f64>;
