//! `preview`: mid-slice PGMs of each enabled transform and of the full stack.

use std::path::PathBuf;

use dstaug::io::{export_slice, read_volume, Axis};
use dstaug::spatial::SpatialParams;
use dstaug::{
    apply, build_warp_grid, make_displacement_field, warp_image, Coord, Error, Lane, Result,
    Substream, TransformKind, VolumeF32,
};

use super::{create_dir, ConfigSource};

#[derive(Clone, Debug)]
pub struct PreviewOptions {
    pub image: PathBuf,
    pub config: ConfigSource,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub allow_extended: bool,
}

pub const STACKED_FILE: &str = "stacked.pgm";

/// File name of the single-transform preview for stack slot `slot`.
pub fn preview_file(slot: usize, kind: TransformKind) -> String {
    format!("{slot:02}_{kind}.pgm")
}

/// Writes `NN_<kind>.pgm` for every enabled transform, applied alone to the
/// whole image with all magnitudes at their range midpoints, and
/// `stacked.pgm` for sample 0 of the full pipeline. Each file is the middle
/// z-slice. Random draws use the data lane of the transform's slot for
/// sample 0. Returns the written paths in stack order.
pub fn cmd_preview(opts: &PreviewOptions) -> Result<Vec<PathBuf>> {
    let config = opts.config.load(opts.seed, opts.allow_extended)?;
    config.validate(opts.allow_extended)?;
    let image: VolumeF32 = read_volume(&opts.image)?;
    let image = image.into_normalized().map_err(|e| {
        Error::ContractViolation(format!(
            "{} is not normalized ({e}); run `dst-aug normalize` first",
            opts.image.display()
        ))
    })?;
    create_dir(&opts.out_dir)?;

    let mut written = Vec::new();
    for (slot, spec) in config.transforms.iter().enumerate() {
        if !spec.enabled {
            continue;
        }
        let draw = spec.midpoint_draw();
        let mut rng = Substream::new(config.seed, 0, slot as u64, Lane::Data);
        let out = match draw.intensity() {
            Some(op) => op.apply(&image, &mut rng)?,
            None => {
                let d = image.dims();
                let c = d.as_array().map(|n| (n as f64 - 1.0) / 2.0);
                let mut params = SpatialParams::crop(d, Coord::new(c[0], c[1], c[2]));
                let m = &draw.magnitudes;
                let field = match spec.kind {
                    TransformKind::Rotate => {
                        params.euler_deg = [m[0], m[1], m[2]];
                        None
                    }
                    TransformKind::Scale => {
                        params.scale = m[0];
                        None
                    }
                    _ => Some(make_displacement_field(d, m[0], m[1], &mut rng)?),
                };
                warp_image(&image, &build_warp_grid(&params, field.as_ref(), d)?)?
            }
        };
        let path = opts.out_dir.join(preview_file(slot, spec.kind));
        export_slice(&out, Axis::Z, out.dims().nz / 2, &path)?;
        written.push(path);
    }

    let stacked = apply(&config, &image, None, 0)?.image;
    let path = opts.out_dir.join(STACKED_FILE);
    export_slice(&stacked, Axis::Z, stacked.dims().nz / 2, &path)?;
    written.push(path);
    Ok(written)
}
