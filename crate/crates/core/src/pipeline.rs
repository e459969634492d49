//! Stacked augmentation pipeline.
//!
//! A [`PipelineConfig`] is an ordered stack of [`TransformSpec`]s, each with an
//! activation probability and a magnitude range. For every sample the
//! pipeline draws all activation flags and magnitudes (a [`SampleDraw`]), fuses
//! the active spatial transforms and the random crop into one warp grid,
//! warps image and label with it, then applies the active intensity
//! transforms to the image in stack order.
//!
//! Every transform slot draws from its own counter-based substream, so turning
//! one transform off never changes what any other transform draws.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intensity::IntensityMagnitude;
use crate::rng::{derive_substream, Lane, Substream, CROP_SLOT};
use crate::scalar::Real;
use crate::spatial::{
    build_warp_grid, make_displacement_field, random_crop_params, warp_image, warp_label, Cuboid,
    SpatialParams,
};
use crate::volume::{Dims, LabelMap, Volume};

/// The nine stackable transforms, in their default stack order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Sharpen,
    Blur,
    Noise,
    Brightness,
    Contrast,
    Perturb,
    Rotate,
    Scale,
    Deform,
}

impl TransformKind {
    pub const ALL: [TransformKind; 9] = [
        TransformKind::Sharpen,
        TransformKind::Blur,
        TransformKind::Noise,
        TransformKind::Brightness,
        TransformKind::Contrast,
        TransformKind::Perturb,
        TransformKind::Rotate,
        TransformKind::Scale,
        TransformKind::Deform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Sharpen => "sharpen",
            TransformKind::Blur => "blur",
            TransformKind::Noise => "noise",
            TransformKind::Brightness => "brightness",
            TransformKind::Contrast => "contrast",
            TransformKind::Perturb => "perturb",
            TransformKind::Rotate => "rotate",
            TransformKind::Scale => "scale",
            TransformKind::Deform => "deform",
        }
    }

    pub fn is_spatial(self) -> bool {
        matches!(
            self,
            TransformKind::Rotate | TransformKind::Scale | TransformKind::Deform
        )
    }

    /// Validated envelope of the primary magnitude.
    ///
    /// sharpen: unsharp strength; blur: sigma (voxels); noise: std;
    /// brightness: shift; contrast: gamma; perturb: scale; rotate: degrees per
    /// axis; scale: factor; deform: smoothing sigma (voxels).
    pub fn default_range(self) -> Range {
        let (lo, hi) = match self {
            TransformKind::Sharpen => (10.0, 30.0),
            TransformKind::Blur => (0.25, 1.5),
            TransformKind::Noise => (0.1, 1.0),
            TransformKind::Brightness => (-0.1, 0.1),
            TransformKind::Contrast => (0.5, 4.5),
            TransformKind::Perturb => (-0.1, 0.1),
            TransformKind::Rotate => (-20.0, 20.0),
            TransformKind::Scale => (0.4, 1.6),
            TransformKind::Deform => (10.0, 13.0),
        };
        Range::new(lo, hi)
    }

    /// Envelope of the secondary magnitude for kinds that have one:
    /// sharpen base sigma, perturb shift, deform amplitude.
    pub fn default_aux_range(self) -> Option<Range> {
        match self {
            TransformKind::Sharpen => Some(Range::new(0.25, 1.5)),
            TransformKind::Perturb => Some(Range::new(-0.1, 0.1)),
            TransformKind::Deform => Some(Range::new(0.0, 900.0)),
            _ => None,
        }
    }

    /// Number of primary draws from `range` (rotation draws one per axis).
    fn primary_draws(self) -> usize {
        if self == TransformKind::Rotate {
            3
        } else {
            1
        }
    }

    /// Lower bound `(min, strict)` on the primary magnitude that holds even
    /// for extended configs.
    fn domain(self) -> Option<(f64, bool)> {
        match self {
            TransformKind::Sharpen => Some((0.0, false)),
            TransformKind::Blur | TransformKind::Contrast | TransformKind::Scale | TransformKind::Deform => {
                Some((0.0, true))
            }
            TransformKind::Noise => Some((0.0, false)),
            _ => None,
        }
    }

    fn aux_domain(self) -> Option<(f64, bool)> {
        match self {
            TransformKind::Sharpen => Some((0.0, true)),
            TransformKind::Deform => Some((0.0, false)),
            _ => None,
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed real interval, serialized as `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Range { lo: v, hi: v }
    }

    pub fn contains_range(&self, other: &Range) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    /// `lo + (hi - lo) * u`; returns `lo` exactly when the range is a point.
    pub fn at(&self, u: f64) -> f64 {
        self.lo + (self.hi - self.lo) * u
    }

    pub fn midpoint(&self) -> f64 {
        self.at(0.5)
    }
}

impl From<[f64; 2]> for Range {
    fn from(a: [f64; 2]) -> Self {
        Range::new(a[0], a[1])
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        [r.lo, r.hi]
    }
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

/// One transform of the stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub kind: TransformKind,
    /// Disabled specs keep their slot (and thus their substream) but never
    /// activate.
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub enabled: bool,
    pub probability: f64,
    pub range: Range,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_range: Option<Range>,
}

impl TransformSpec {
    /// The kind's default ranges with the given probability.
    pub fn with_defaults(kind: TransformKind, probability: f64) -> Self {
        TransformSpec {
            kind,
            enabled: true,
            probability,
            range: kind.default_range(),
            aux_range: kind.default_aux_range(),
        }
    }

    pub fn validate(&self, allow_extended: bool) -> Result<()> {
        let kind = self.kind;
        let bad = |m: String| Err(Error::InvalidParameter(format!("{kind}: {m}")));
        if !(0.0..=1.0).contains(&self.probability) {
            return bad(format!("probability {} outside [0, 1]", self.probability));
        }
        let check = |name: &str, r: &Range, domain: Option<(f64, bool)>, envelope: Range| {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
                return bad(format!("{name} [{}, {}] is not a finite interval", r.lo, r.hi));
            }
            if let Some((min, strict)) = domain {
                if r.lo < min || (strict && r.lo == min) {
                    let op = if strict { ">" } else { ">=" };
                    return bad(format!("{name} values must be {op} {min}, got [{}, {}]", r.lo, r.hi));
                }
            }
            if !allow_extended && !envelope.contains_range(r) {
                return bad(format!(
                    "{name} [{}, {}] exceeds the validated range [{}, {}]; pass --allow-extended to override",
                    r.lo, r.hi, envelope.lo, envelope.hi
                ));
            }
            Ok(())
        };
        check("range", &self.range, kind.domain(), kind.default_range())?;
        match (kind.default_aux_range(), &self.aux_range) {
            (Some(env), Some(aux)) => check("aux_range", aux, kind.aux_domain(), env),
            (Some(_), None) => bad("aux_range is required".into()),
            (None, Some(_)) => bad("takes no aux_range".into()),
            (None, None) => Ok(()),
        }
    }

    /// An activated draw with every magnitude at its range midpoint.
    pub fn midpoint_draw(&self) -> TransformDraw {
        let mut magnitudes = vec![self.range.midpoint(); self.kind.primary_draws()];
        magnitudes.extend(self.aux_range.map(|r| r.midpoint()));
        TransformDraw {
            kind: self.kind,
            activated: true,
            magnitudes,
        }
    }
}

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    MriProstate,
    MriHeart,
    UsVentricle,
    Top4,
    Baseline,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::MriProstate,
        Preset::MriHeart,
        Preset::UsVentricle,
        Preset::Top4,
        Preset::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::MriProstate => "mri_prostate",
            Preset::MriHeart => "mri_heart",
            Preset::UsVentricle => "us_ventricle",
            Preset::Top4 => "top4",
            Preset::Baseline => "baseline",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidParameter(format!("unknown preset `{s}` (expected one of {names:?})"))
            })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Default per-transform probability.
pub const DEFAULT_PROBABILITY: f64 = 0.5;

/// Kinds enabled by the top-4 ablation preset.
pub const TOP4_KINDS: [TransformKind; 4] = [
    TransformKind::Sharpen,
    TransformKind::Brightness,
    TransformKind::Contrast,
    TransformKind::Scale,
];

/// The full nine-transform stack for `preset`.
pub fn default_dst_config(preset: Preset) -> PipelineConfig {
    let crop_dims = match preset {
        Preset::MriProstate => Dims::new(96, 96, 32),
        _ => Dims::cube(96),
    };
    let transforms = TransformKind::ALL
        .into_iter()
        .map(|kind| TransformSpec {
            enabled: match preset {
                Preset::Baseline => false,
                Preset::Top4 => TOP4_KINDS.contains(&kind),
                _ => true,
            },
            ..TransformSpec::with_defaults(kind, DEFAULT_PROBABILITY)
        })
        .collect();
    PipelineConfig {
        preset: Some(preset.name().to_string()),
        seed: 0,
        crop_dims,
        transforms,
    }
}

/// An ordered transform stack plus crop size and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: u64,
    #[serde(rename = "crop")]
    pub crop_dims: Dims,
    #[serde(rename = "transform", default)]
    pub transforms: Vec<TransformSpec>,
}

impl PipelineConfig {
    pub fn validate(&self, allow_extended: bool) -> Result<()> {
        if self.crop_dims.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "crop dims must be >= 1, got {}",
                self.crop_dims
            )));
        }
        for (i, spec) in self.transforms.iter().enumerate() {
            spec.validate(allow_extended)?;
            if spec.kind.is_spatial() && self.transforms[..i].iter().any(|s| s.kind == spec.kind) {
                return Err(Error::InvalidParameter(format!(
                    "spatial transform `{}` listed more than once",
                    spec.kind
                )));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            what: "pipeline config".into(),
            message: e.to_string(),
        })
    }

    /// Parses and structurally validates a config document.
    pub fn from_toml(text: &str, allow_extended: bool) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Parse {
            what: "pipeline config".into(),
            message: e.to_string(),
        })?;
        cfg.validate(allow_extended)?;
        Ok(cfg)
    }

    /// Kinds with `enabled` set.
    pub fn enabled_kinds(&self) -> Vec<TransformKind> {
        self.transforms
            .iter()
            .filter(|s| s.enabled)
            .map(|s| s.kind)
            .collect()
    }

    fn slot_of(&self, kind: TransformKind) -> Option<usize> {
        self.transforms.iter().position(|s| s.kind == kind)
    }
}

/// Realized activation and magnitudes of one transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformDraw {
    pub kind: TransformKind,
    pub activated: bool,
    /// Primary draws, then the aux draw if the kind has one.
    pub magnitudes: Vec<f64>,
}

impl TransformDraw {
    /// The intensity operation this draw describes, if it is one.
    pub fn intensity(&self) -> Option<IntensityMagnitude> {
        let m = &self.magnitudes;
        Some(match self.kind {
            TransformKind::Sharpen => IntensityMagnitude::Sharpen {
                strength: m[0],
                base_sigma: m[1],
            },
            TransformKind::Blur => IntensityMagnitude::Blur { sigma: m[0] },
            TransformKind::Noise => IntensityMagnitude::Noise { std: m[0] },
            TransformKind::Brightness => IntensityMagnitude::Brightness { delta: m[0] },
            TransformKind::Contrast => IntensityMagnitude::Contrast { gamma: m[0] },
            TransformKind::Perturb => IntensityMagnitude::Perturb {
                scale: m[0],
                shift: m[1],
            },
            _ => return None,
        })
    }
}

/// Draws activation (`u < p`) and then all magnitudes uniformly.
///
/// Magnitudes are drawn whether or not the transform activates, so the
/// number of draws taken from `substream` never depends on activation.
pub fn sample_params(spec: &TransformSpec, substream: &mut Substream) -> TransformDraw {
    use rand::Rng;
    let u: f64 = substream.random();
    let activated = spec.enabled && u < spec.probability;
    let mut magnitudes: Vec<f64> = (0..spec.kind.primary_draws())
        .map(|_| spec.range.at(substream.random()))
        .collect();
    if let Some(aux) = spec.aux_range {
        magnitudes.push(aux.at(substream.random()));
    }
    TransformDraw {
        kind: spec.kind,
        activated,
        magnitudes,
    }
}

/// Everything drawn for one sample; replaying it reproduces the outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleDraw {
    pub seed: u64,
    pub sample_index: u64,
    pub transforms: Vec<TransformDraw>,
    /// The single fused transform applied to both image and label.
    pub spatial: SpatialParams,
    /// Input cuboid read by the warp; filled in by [`apply`].
    #[serde(default)]
    pub cuboid: Option<Cuboid>,
}

impl SampleDraw {
    pub fn activated_kinds(&self) -> Vec<TransformKind> {
        self.transforms
            .iter()
            .filter(|t| t.activated)
            .map(|t| t.kind)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("draw records always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "sample draw".into(),
            message: e.to_string(),
        })
    }
}

/// Draws all parameters for `sample_index` without touching voxel data.
pub fn draw_sample(config: &PipelineConfig, input_dims: Dims, sample_index: u64) -> SampleDraw {
    let transforms: Vec<TransformDraw> = config
        .transforms
        .iter()
        .enumerate()
        .map(|(i, spec)| sample_params(spec, &mut derive_substream(config.seed, sample_index, i as u64)))
        .collect();

    let mut crop_rng = Substream::new(config.seed, sample_index, CROP_SLOT, Lane::Params);
    let mut spatial = random_crop_params(input_dims, config.crop_dims, &mut crop_rng);
    for t in transforms.iter().filter(|t| t.activated) {
        match t.kind {
            TransformKind::Rotate => spatial.euler_deg = [t.magnitudes[0], t.magnitudes[1], t.magnitudes[2]],
            TransformKind::Scale => spatial.scale = t.magnitudes[0],
            TransformKind::Deform => {
                spatial.deform_sigma = t.magnitudes[0];
                spatial.deform_alpha = t.magnitudes[1];
            }
            _ => {}
        }
    }
    SampleDraw {
        seed: config.seed,
        sample_index,
        transforms,
        spatial,
        cuboid: None,
    }
}

/// Result of one pipeline application.
#[derive(Clone, Debug, PartialEq)]
pub struct Augmented<T> {
    pub image: Volume<T>,
    pub label: Option<LabelMap>,
    pub draw: SampleDraw,
}

fn check_inputs<T: Real>(image: &Volume<T>, label: Option<&LabelMap>) -> Result<()> {
    image.require_normalized("the augmentation pipeline")?;
    if let Some(l) = label {
        l.check_aligned(image)?;
    }
    Ok(())
}

fn execute<T: Real>(
    config: &PipelineConfig,
    image: &Volume<T>,
    label: Option<&LabelMap>,
    mut draw: SampleDraw,
) -> Result<Augmented<T>> {
    let sp = draw.spatial;
    let field = if sp.deform_alpha > 0.0 {
        let slot = config.slot_of(TransformKind::Deform).ok_or_else(|| {
            Error::InvalidInput("draw has a deformation but the config has no deform slot".into())
        })?;
        let mut rng = Substream::new(draw.seed, draw.sample_index, slot as u64, Lane::Data);
        Some(make_displacement_field(
            sp.crop_dims,
            sp.deform_sigma,
            sp.deform_alpha,
            &mut rng,
        )?)
    } else {
        None
    };
    let grid = build_warp_grid(&sp, field.as_ref(), image.dims())?;
    let mut out = warp_image(image, &grid)?;
    let out_label = label.map(|l| warp_label(l, &grid)).transpose()?;
    draw.cuboid = grid.cuboid();
    drop(grid);

    for (i, t) in draw.transforms.iter().enumerate() {
        if !t.activated {
            continue;
        }
        if let Some(op) = t.intensity() {
            let mut rng = Substream::new(draw.seed, draw.sample_index, i as u64, Lane::Data);
            out = op.apply(&out, &mut rng)?;
        }
    }
    Ok(Augmented {
        image: out,
        label: out_label,
        draw,
    })
}

/// Applies the stack to one (image, label) pair.
///
/// The output has `config.crop_dims` and is bit-for-bit a function of
/// `(config, image, label, sample_index)` only.
pub fn apply<T: Real>(
    config: &PipelineConfig,
    image: &Volume<T>,
    label: Option<&LabelMap>,
    sample_index: u64,
) -> Result<Augmented<T>> {
    check_inputs(image, label)?;
    config.validate(true)?;
    let draw = draw_sample(config, image.dims(), sample_index);
    execute(config, image, label, draw)
}

/// Re-runs a recorded draw. Produces the same outputs as the [`apply`] call
/// that recorded it.
pub fn replay<T: Real>(
    config: &PipelineConfig,
    image: &Volume<T>,
    label: Option<&LabelMap>,
    draw: &SampleDraw,
) -> Result<Augmented<T>> {
    check_inputs(image, label)?;
    config.validate(true)?;
    let kinds_match = draw.transforms.len() == config.transforms.len()
        && draw
            .transforms
            .iter()
            .zip(&config.transforms)
            .all(|(d, s)| d.kind == s.kind);
    if !kinds_match || draw.spatial.crop_dims != config.crop_dims {
        return Err(Error::InvalidInput(
            "sample draw was recorded with a different transform stack".into(),
        ));
    }
    let mut draw = draw.clone();
    draw.cuboid = None;
    execute(config, image, label, draw)
}
