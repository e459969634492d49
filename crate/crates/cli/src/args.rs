//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dstaug::{Dims, Error, Preset, Result};

use crate::commands::ConfigSource;
use crate::{AugmentOptions, BenchOptions, NormalizeOptions, PreviewOptions};

#[derive(Debug, Parser)]
#[command(name = "dst-aug", version, about = "Stacked 3D augmentation for segmentation volumes")]
pub struct Cli {
    /// Worker threads (default: one per core). Never changes output bytes.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log progress at info level (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resample to isotropic spacing and min-max normalize a dataset.
    Normalize(NormalizeArgs),
    /// Write augmented samples for every manifest entry.
    Augment(AugmentArgs),
    /// Write mid-slice PGM previews of each transform and the full stack.
    Preview(PreviewArgs),
    /// Time the fused warp over several input sizes.
    Bench(BenchArgs),
    /// List presets or dump them as config documents.
    Presets(PresetsArgs),
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Output voxel size in mm on every axis.
    #[arg(long, default_value_t = 1.0)]
    pub target_spacing: f64,
}

impl NormalizeArgs {
    pub fn into_options(self) -> NormalizeOptions {
        NormalizeOptions {
            manifest: self.manifest,
            out_dir: self.out,
            target_spacing: self.target_spacing,
        }
    }
}

/// Exactly one of `--config` and `--preset`.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ConfigChoice {
    /// Pipeline config (TOML), e.g. one written by `presets --dump`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    #[command(flatten)]
    pub choice: ConfigChoice,
    /// Accept magnitudes outside the validated ranges.
    #[arg(long)]
    pub allow_extended: bool,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SourceArgs {
    fn source(&self) -> Result<ConfigSource> {
        match (&self.choice.config, &self.choice.preset) {
            (Some(p), _) => Ok(ConfigSource::File(p.clone())),
            (None, Some(name)) => Ok(ConfigSource::Preset(name.parse::<Preset>()?)),
            (None, None) => Err(Error::InvalidParameter("one of --config or --preset is required".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub samples_per_image: u32,
    #[command(flatten)]
    pub source: SourceArgs,
}

impl AugmentArgs {
    pub fn into_options(self) -> Result<AugmentOptions> {
        Ok(AugmentOptions {
            manifest: self.manifest,
            config: self.source.source()?,
            out_dir: self.out,
            samples_per_image: self.samples_per_image,
            seed: self.source.seed,
            allow_extended: self.source.allow_extended,
        })
    }
}

#[derive(Debug, Args)]
pub struct PreviewArgs {
    /// A normalized image (.nii or .vol).
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub source: SourceArgs,
}

impl PreviewArgs {
    pub fn into_options(self) -> Result<PreviewOptions> {
        Ok(PreviewOptions {
            image: self.image,
            config: self.source.source()?,
            out_dir: self.out,
            seed: self.source.seed,
            allow_extended: self.source.allow_extended,
        })
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Crop size: `N` for a cube or `X,Y,Z`.
    #[arg(long, default_value = "96")]
    pub crop: String,
    /// Input sizes separated by `;` or spaces, each `N` or `X,Y,Z`; plain
    /// comma lists such as `128,256,512` are read as cubes.
    #[arg(long, default_value = "128,256,512")]
    pub input_sizes: String,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BenchArgs {
    pub fn into_options(self) -> Result<BenchOptions> {
        Ok(BenchOptions {
            crop: parse_dims(&self.crop)?,
            input_sizes: parse_dims_list(&self.input_sizes)?,
            reps: self.reps,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Args)]
pub struct PresetsArgs {
    /// Dump config documents: all presets, or only the named one.
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    pub dump: Option<String>,
    /// With --dump, write `<preset>.toml` files here instead of stdout.
    #[arg(long, requires = "dump")]
    pub out: Option<PathBuf>,
}

/// Parses `N`, `X,Y,Z` or `XxYxZ`.
pub fn parse_dims(s: &str) -> Result<Dims> {
    let parts: Vec<&str> = s.split([',', 'x']).map(str::trim).collect();
    let nums = parts
        .iter()
        .map(|p| p.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::InvalidParameter(format!("bad dims `{s}`: {e}")))?;
    let dims = match nums[..] {
        [n] => Dims::cube(n),
        [x, y, z] => Dims::new(x, y, z),
        _ => return Err(Error::InvalidParameter(format!("bad dims `{s}`: expected N or X,Y,Z"))),
    };
    if dims.is_empty() {
        return Err(Error::InvalidParameter(format!("dims `{s}` must be >= 1")));
    }
    Ok(dims)
}

fn parse_dims_list(s: &str) -> Result<Vec<Dims>> {
    let s = s.trim();
    let items: Vec<&str> = if s.contains([';', ' ']) {
        s.split([';', ' ']).filter(|t| !t.is_empty()).collect()
    } else {
        s.split(',').collect()
    };
    if items.is_empty() {
        return Err(Error::InvalidParameter("--input-sizes is empty".into()));
    }
    items.into_iter().map(parse_dims).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_forms() {
        assert_eq!(parse_dims("96").unwrap(), Dims::cube(96));
        assert_eq!(parse_dims("96,96,32").unwrap(), Dims::new(96, 96, 32));
        assert_eq!(parse_dims("96x96x32").unwrap(), Dims::new(96, 96, 32));
        assert!(parse_dims("1,2").is_err());
        assert!(parse_dims("0").is_err());
        assert!(parse_dims("a").is_err());
    }

    #[test]
    fn size_lists() {
        assert_eq!(
            parse_dims_list("128,256,512").unwrap(),
            vec![Dims::cube(128), Dims::cube(256), Dims::cube(512)]
        );
        assert_eq!(
            parse_dims_list("64;96,96,32").unwrap(),
            vec![Dims::cube(64), Dims::new(96, 96, 32)]
        );
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
