//! `bench`: wall time of the fused warp for one crop size over several input
//! sizes.
//!
//! Only the grid build and the interpolation are timed. All input volumes
//! and the displacement field are prepared before timing, each size gets one
//! untimed warm-up run, and repetitions cycle through the sizes in turn.

use std::time::Instant;

use dstaug::spatial::SpatialParams;
use dstaug::{
    build_warp_grid, make_displacement_field, warp_image, Coord, Dims, DisplacementFieldF32,
    Error, Result, VolumeF32,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const MIN_REPS: usize = 5;

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub crop: Dims,
    pub input_sizes: Vec<Dims>,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCase {
    pub input_dims: Dims,
    pub crop_dims: Dims,
    pub repetitions: usize,
    pub p50_ms: f64,
    pub p90_ms: f64,
    /// Voxels of the input cuboid the warp reads, times the voxel size.
    pub bytes_read_bound: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cases: Vec<BenchCase>,
    /// Largest p50 divided by smallest p50.
    pub p50_ratio: f64,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Fixed mid-envelope transform: rotation, unit scale and a deformation,
/// centered in the input.
fn bench_params(input: Dims, crop: Dims) -> SpatialParams {
    let c = input.as_array().map(|n| (n as f64 - 1.0) / 2.0);
    SpatialParams {
        euler_deg: [10.0, -10.0, 15.0],
        scale: 1.0,
        deform_sigma: 11.5,
        deform_alpha: 450.0,
        crop_dims: crop,
        crop_center: Coord::new(c[0], c[1], c[2]),
    }
}

fn random_volume(dims: Dims, rng: &mut ChaCha8Rng) -> Result<VolumeF32> {
    let mut data: Vec<f32> = Vec::new();
    data.try_reserve_exact(dims.len()).map_err(|_| {
        Error::InvalidInput(format!(
            "insufficient memory for a {dims} input ({} MiB)",
            (dims.len() * 4) >> 20
        ))
    })?;
    data.extend((0..dims.len()).map(|_| rng.random::<f32>()));
    VolumeF32::new_normalized(dims, [1.0; 3], data)
}

pub fn cmd_bench(opts: &BenchOptions) -> Result<BenchReport> {
    if opts.reps < MIN_REPS {
        return Err(Error::InvalidParameter(format!(
            "--reps must be >= {MIN_REPS}, got {}",
            opts.reps
        )));
    }
    if opts.input_sizes.is_empty() {
        return Err(Error::InvalidParameter("no input sizes given".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let p0 = bench_params(opts.crop, opts.crop);
    let field: DisplacementFieldF32 =
        make_displacement_field(opts.crop, p0.deform_sigma, p0.deform_alpha, &mut rng)?;

    let inputs = opts
        .input_sizes
        .iter()
        .map(|&d| Ok((random_volume(d, &mut rng)?, bench_params(d, opts.crop))))
        .collect::<Result<Vec<_>>>()?;
    let run = |(volume, params): &(VolumeF32, SpatialParams)| -> Result<_> {
        let grid = build_warp_grid(params, Some(&field), volume.dims())?;
        let out = warp_image(volume, &grid)?;
        Ok((grid.cuboid(), out))
    };

    let mut cuboids = Vec::with_capacity(inputs.len());
    for input in &inputs {
        cuboids.push(run(input)?.0);
    }
    // round-robin so slow periods on a shared machine hit every size alike
    let mut times = vec![Vec::with_capacity(opts.reps); inputs.len()];
    for _ in 0..opts.reps {
        for (input, t) in inputs.iter().zip(&mut times) {
            let start = Instant::now();
            let out = run(input)?;
            t.push(start.elapsed().as_secs_f64() * 1e3);
            drop(out);
        }
    }

    let mut cases = Vec::with_capacity(inputs.len());
    for ((input, mut times), cuboid) in opts.input_sizes.iter().zip(times).zip(cuboids) {
        times.sort_by(f64::total_cmp);
        let case = BenchCase {
            input_dims: *input,
            crop_dims: opts.crop,
            repetitions: opts.reps,
            p50_ms: percentile(&times, 0.5),
            p90_ms: percentile(&times, 0.9),
            bytes_read_bound: cuboid.map_or(0, |c| c.dims().len() as u64 * 4),
        };
        log::info!("{input}: p50 {:.2} ms, p90 {:.2} ms", case.p50_ms, case.p90_ms);
        cases.push(case);
    }
    let p50s = cases.iter().map(|c| c.p50_ms);
    let max = p50s.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = p50s.fold(f64::INFINITY, f64::min);
    Ok(BenchReport {
        cases,
        p50_ratio: max / min,
    })
}
