//! `augment`: write augmented samples for every manifest entry.
//!
//! Output tree:
//!
//! ```text
//! <out>/config.toml                       effective config (seed included)
//! <out>/manifest.jsonl                    one entry per written sample
//! <out>/augment_report.json               per-entry outcome
//! <out>/samples/<id>/<k>/image.nii
//! <out>/samples/<id>/<k>/label.nii        when the entry has a label
//! <out>/samples/<id>/<k>/draw.json        the SampleDraw of the sample
//! ```
//!
//! `<k>` is the zero-padded sample number within the entry. Sample `k` of the
//! entry at manifest position `e` uses sample index `e * 2^32 + k`, so
//! changing `--samples-per-image` never changes existing samples.

use std::path::{Path, PathBuf};

use dstaug::io::{read_label, read_manifest, read_volume, write_label, write_manifest, write_volume, DatasetManifest, ManifestEntry};
use dstaug::{apply, Error, LabelMap, PipelineConfig, Result, VolumeF32};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_id, create_dir, write_json, ConfigSource, EntryOutcome};

#[derive(Clone, Debug)]
pub struct AugmentOptions {
    pub manifest: PathBuf,
    pub config: ConfigSource,
    pub out_dir: PathBuf,
    pub samples_per_image: u32,
    pub seed: Option<u64>,
    pub allow_extended: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub seed: u64,
    pub samples_per_image: u32,
    pub entries: Vec<EntryOutcome>,
    pub failures: usize,
}

pub const REPORT_FILE: &str = "augment_report.json";

pub fn sample_index(entry_position: usize, k: u32) -> u64 {
    ((entry_position as u64) << 32) | k as u64
}

pub fn sample_dir(out_dir: &Path, id: &str, k: u32) -> PathBuf {
    out_dir.join("samples").join(id).join(format!("{k:04}"))
}

pub fn cmd_augment(opts: &AugmentOptions) -> Result<AugmentReport> {
    let config = opts.config.load(opts.seed, opts.allow_extended)?;
    config.validate(opts.allow_extended)?;
    let manifest = read_manifest(&opts.manifest)?;
    create_dir(&opts.out_dir)?;
    let config_path = opts.out_dir.join("config.toml");
    std::fs::write(&config_path, config.to_toml()?).map_err(|e| Error::io(&config_path, e))?;

    let mut entries = Vec::with_capacity(manifest.len());
    let mut out_manifest = DatasetManifest::default();
    for (pos, entry) in manifest.entries.iter().enumerate() {
        let r = augment_entry(&config, opts, pos, entry);
        if let Ok(written) = &r {
            out_manifest.entries.extend(written.iter().cloned());
        }
        entries.push(EntryOutcome::from_result(&entry.id, r.map(|_| Vec::new())));
    }
    write_manifest(&out_manifest, opts.out_dir.join("manifest.jsonl"))?;
    let report = AugmentReport {
        seed: config.seed,
        samples_per_image: opts.samples_per_image,
        failures: entries.iter().filter(|e| !e.ok).count(),
        entries,
    };
    write_json(&report, &opts.out_dir.join(REPORT_FILE))?;
    Ok(report)
}

fn load_entry(entry: &ManifestEntry) -> Result<(VolumeF32, Option<LabelMap>)> {
    let image: VolumeF32 = read_volume(&entry.image)?;
    let image = image.into_normalized().map_err(|e| {
        Error::ContractViolation(format!(
            "{} is not normalized ({e}); run `dst-aug normalize` first",
            entry.image.display()
        ))
    })?;
    let label = entry.label.as_ref().map(read_label).transpose()?;
    Ok((image, label))
}

fn augment_entry(
    config: &PipelineConfig,
    opts: &AugmentOptions,
    pos: usize,
    entry: &ManifestEntry,
) -> Result<Vec<ManifestEntry>> {
    check_id(&entry.id)?;
    let (image, label) = load_entry(entry)?;
    (0..opts.samples_per_image)
        .into_par_iter()
        .map(|k| {
            let out = apply(config, &image, label.as_ref(), sample_index(pos, k))?;
            let dir = sample_dir(&opts.out_dir, &entry.id, k);
            create_dir(&dir)?;
            write_volume(&out.image, dir.join("image.nii"))?;
            if let Some(l) = &out.label {
                write_label(l, dir.join("label.nii"))?;
            }
            let draw_path = dir.join("draw.json");
            std::fs::write(&draw_path, out.draw.to_json() + "\n").map_err(|e| Error::io(&draw_path, e))?;

            let rel = dir.strip_prefix(&opts.out_dir).expect("sample dir is under out").to_path_buf();
            Ok(ManifestEntry {
                id: format!("{}_{k:04}", entry.id),
                image: rel.join("image.nii"),
                label: out.label.as_ref().map(|_| rel.join("label.nii")),
                modality: entry.modality.clone(),
            })
        })
        .collect()
}
