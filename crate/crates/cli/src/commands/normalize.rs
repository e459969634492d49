//! `normalize`: isotropic resampling followed by min-max normalization.

use std::path::{Path, PathBuf};

use dstaug::io::{read_label, read_manifest, read_volume, write_label, write_manifest, DatasetManifest, ManifestEntry};
use dstaug::{normalize_intensity, resample_isotropic, resample_label_isotropic, Error, NormalizeStatus, Result, VolumeF32};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_id, create_dir, write_json, EntryOutcome};

#[derive(Clone, Debug)]
pub struct NormalizeOptions {
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    pub target_spacing: f64,
}

/// Written to `<out>/normalize_report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizeReport {
    pub target_spacing: f64,
    pub entries: Vec<EntryOutcome>,
    pub failures: usize,
}

pub const REPORT_FILE: &str = "normalize_report.json";
pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Writes `images/<id>.nii`, `labels/<id>.nii` (when the entry has a label),
/// a manifest of the successful entries and a report. Entry failures are
/// collected in the report rather than aborting the run.
pub fn cmd_normalize(opts: &NormalizeOptions) -> Result<NormalizeReport> {
    let t = opts.target_spacing;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("--target-spacing must be > 0, got {t}")));
    }
    let manifest = read_manifest(&opts.manifest)?;
    create_dir(&opts.out_dir.join("images"))?;
    create_dir(&opts.out_dir.join("labels"))?;

    let results: Vec<(EntryOutcome, Option<ManifestEntry>)> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let mut written = None;
            let r = normalize_entry(entry, &opts.out_dir, t).map(|(e, w)| {
                written = Some(e);
                w
            });
            (EntryOutcome::from_result(&entry.id, r), written)
        })
        .collect();

    let mut out_manifest = DatasetManifest::default();
    let mut entries = Vec::with_capacity(results.len());
    for (outcome, written) in results {
        entries.push(outcome);
        out_manifest.entries.extend(written);
    }
    write_manifest(&out_manifest, opts.out_dir.join(MANIFEST_FILE))?;
    let report = NormalizeReport {
        target_spacing: t,
        failures: entries.iter().filter(|e| !e.ok).count(),
        entries,
    };
    write_json(&report, &opts.out_dir.join(REPORT_FILE))?;
    Ok(report)
}

fn normalize_entry(entry: &ManifestEntry, out_dir: &Path, t: f64) -> Result<(ManifestEntry, Vec<String>)> {
    check_id(&entry.id)?;
    let image: VolumeF32 = read_volume(&entry.image)?;
    let label = entry.label.as_ref().map(read_label).transpose()?;
    if let Some(l) = &label {
        l.check_aligned(&image)?;
    }
    let (image, status) = normalize_intensity(&resample_isotropic(&image, t)?);
    let mut warnings = Vec::new();
    if status == NormalizeStatus::ConstantInput {
        log::warn!("{}: constant image, written as zeros", entry.id);
        warnings.push("constant image; output is all zeros".to_string());
    }

    let image_rel = PathBuf::from("images").join(format!("{}.nii", entry.id));
    dstaug::io::write_volume(&image, out_dir.join(&image_rel))?;
    let label_rel = match label {
        Some(l) => {
            let rel = PathBuf::from("labels").join(format!("{}.nii", entry.id));
            write_label(&resample_label_isotropic(&l, t)?, out_dir.join(&rel))?;
            Some(rel)
        }
        None => None,
    };
    log::info!("{}: normalized to {}", entry.id, image.dims());
    let written = ManifestEntry {
        id: entry.id.clone(),
        image: image_rel,
        label: label_rel,
        modality: entry.modality.clone(),
    };
    Ok((written, warnings))
}
