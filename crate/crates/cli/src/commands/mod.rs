pub mod augment;
pub mod bench;
pub mod normalize;
pub mod presets;
pub mod preview;

use std::path::{Path, PathBuf};

use dstaug::{default_dst_config, Error, PipelineConfig, Preset, Result};
use serde::{Deserialize, Serialize};

/// Where a pipeline config comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ConfigSource {
    File(PathBuf),
    Preset(Preset),
}

impl ConfigSource {
    /// Loads and validates the config, applying an optional seed override.
    pub fn load(&self, seed: Option<u64>, allow_extended: bool) -> Result<PipelineConfig> {
        let mut config = match self {
            ConfigSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                PipelineConfig::from_toml(&text, allow_extended)?
            }
            ConfigSource::Preset(p) => default_dst_config(*p),
        };
        if let Some(s) = seed {
            config.seed = s;
        }
        Ok(config)
    }
}

/// Per-entry result line of a batch report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryOutcome {
    pub id: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EntryOutcome {
    fn from_result(id: &str, r: Result<Vec<String>>) -> Self {
        match r {
            Ok(warnings) => EntryOutcome {
                id: id.to_string(),
                ok: true,
                warnings,
                error: None,
            },
            Err(e) => {
                log::error!("{id}: {e}");
                EntryOutcome {
                    id: id.to_string(),
                    ok: false,
                    warnings: Vec::new(),
                    error: Some(e.to_string()),
                }
            }
        }
    }
}

/// Ids become file names, so they must be a single plain path component.
fn check_id(id: &str) -> Result<()> {
    let plain = !id.is_empty()
        && id != "."
        && id != ".."
        && !id.contains(['/', '\\'])
        && !id.chars().any(char::is_control);
    if plain {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("id `{id}` cannot be used as a file name")))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
