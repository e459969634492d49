//! Dataset manifests: one JSON object per line.
//!
//! ```text
//! # comments and blank lines are ignored
//! {"id": "case01", "image": "img/case01.nii", "label": "seg/case01.nii", "modality": "mri"}
//! {"id": "case02", "image": "img/case02.nii"}
//! ```
//!
//! Relative paths are resolved against the manifest's directory. An entry is
//! treated as having a label map only when it has a `label` key.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub image: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modality: Option<String>,
}

/// Entries in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses manifest text, resolving relative paths against `base_dir`.
/// All validation problems are reported together.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<DatasetManifest> {
    let mut entries = Vec::new();
    let mut problems = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut entry: ManifestEntry = match serde_json::from_str(line) {
            Ok(e) => e,
            Err(e) => {
                problems.push(format!("line {lineno}: {e}"));
                continue;
            }
        };
        if entry.id.is_empty() {
            problems.push(format!("line {lineno}: empty id"));
        }
        if entry.image.as_os_str().is_empty() {
            problems.push(format!("line {lineno}: missing image path"));
        }
        if entry.label.as_ref().is_some_and(|l| l.as_os_str().is_empty()) {
            problems.push(format!("line {lineno}: empty label path"));
        }
        if let Some(first) = seen.insert(entry.id.clone(), lineno) {
            problems.push(format!(
                "line {lineno}: duplicate id `{}` (first on line {first})",
                entry.id
            ));
        }
        entry.image = base_dir.join(&entry.image);
        entry.label = entry.label.map(|l| base_dir.join(l));
        entries.push(entry);
    }
    if !problems.is_empty() {
        return Err(Error::Manifest(problems));
    }
    if entries.is_empty() {
        log::warn!("manifest in {} has no entries", base_dir.display());
    }
    Ok(DatasetManifest { entries })
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base)
}

/// Writes entries verbatim (paths are not relativized).
pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for e in &manifest.entries {
        text.push_str(&serde_json::to_string(e).expect("entries serialize"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
