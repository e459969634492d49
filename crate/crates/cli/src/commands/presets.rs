//! `presets`: list built-in presets or dump them as config documents.

use std::io::Write;
use std::path::{Path, PathBuf};

use dstaug::{default_dst_config, Error, Preset, Result};

use super::create_dir;

/// The TOML document `augment --config` accepts for `preset`.
pub fn preset_document(preset: Preset) -> String {
    default_dst_config(preset)
        .to_toml()
        .expect("preset configs serialize")
}

pub fn preset_documents() -> Vec<(Preset, String)> {
    Preset::ALL.into_iter().map(|p| (p, preset_document(p))).collect()
}

/// Without `dump`, lists preset names. `dump = Some("")` dumps every preset,
/// `Some(name)` only that one. With `out`, documents go to
/// `<out>/<name>.toml`; on stdout several documents are separated by
/// `# preset: <name>` comment lines.
pub fn cmd_presets(dump: Option<String>, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let Some(which) = dump else {
        for (p, _) in preset_documents() {
            let c = default_dst_config(p);
            println!("{p}\tcrop {}\tenabled {:?}", c.crop_dims, c.enabled_kinds().iter().map(|k| k.name()).collect::<Vec<_>>());
        }
        return Ok(Vec::new());
    };
    let selected = if which.is_empty() {
        preset_documents()
    } else {
        let p: Preset = which.parse()?;
        vec![(p, preset_document(p))]
    };
    let mut written = Vec::new();
    match out {
        Some(dir) => {
            create_dir(dir)?;
            for (p, doc) in selected {
                let path = dir.join(format!("{p}.toml"));
                std::fs::write(&path, doc).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let single = selected.len() == 1;
            for (p, doc) in selected {
                let r = if single {
                    stdout.write_all(doc.as_bytes())
                } else {
                    write!(stdout, "# preset: {p}\n{doc}\n")
                };
                r.map_err(|e| Error::io("<stdout>", e))?;
            }
        }
    }
    Ok(written)
}
