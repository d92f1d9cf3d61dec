use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use bodyaudit_core::{Error, ImageRef, Payload, PipelineConfig, PromptTemplateSet};
use serde::{Deserialize, Serialize};

/// Wall-clock milliseconds per stage; stages that did not run are absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub redundant_ms: f64,
    pub absent_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair_ms: Option<f64>,
}

/// Artifacts written for one image. Paths are relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub source: PathBuf,
    pub result: PathBuf,
    pub probes_log: PathBuf,
    pub loop_log: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repaired: Option<PathBuf>,
    pub timing: Timing,
}

impl ImageRecord {
    fn artifacts(&self) -> impl Iterator<Item = &PathBuf> {
        [&self.result, &self.probes_log, &self.loop_log]
            .into_iter()
            .chain(self.plan.iter())
            .chain(self.report.iter())
            .chain(self.repaired.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub command: String,
    pub config: PipelineConfig,
    pub templates: PromptTemplateSet,
    pub backends: Vec<String>,
    pub input: PathBuf,
    pub images: Vec<ImageRecord>,
}

pub const RUN_RECORD: &str = "run_record.json";

impl RunRecord {
    pub fn new_id() -> String {
        let ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis());
        format!("run-{ms}")
    }

    /// Checks that every referenced artifact exists, then writes the record.
    pub fn finalize(&self, out: &Path) -> Result<PathBuf> {
        for img in &self.images {
            for rel in img.artifacts() {
                if !out.join(rel).is_file() {
                    return Err(Error::Data(format!(
                        "run record references missing artifact {}",
                        rel.display()
                    ))
                    .into());
                }
            }
        }
        let path = out.join(RUN_RECORD);
        write_json(&path, self)?;
        Ok(path)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Data(format!("creating {}: {e}", dir.display())).into())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing output")?;
    std::fs::write(path, text + "\n")
        .map_err(|e| Error::Data(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(&item).context("serializing output")?);
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| Error::Data(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?)
}

/// Saves an image under `dir/stem`: scenes as JSON, files copied with their
/// extension. Returns the written path.
pub fn save_image(image: &ImageRef, dir: &Path, stem: &str) -> Result<PathBuf> {
    match image.payload() {
        Payload::Scene { scene } => {
            let path = dir.join(format!("{stem}.json"));
            scene.save(&path)?;
            Ok(path)
        }
        Payload::File { path: src } => {
            let ext = src.extension().and_then(|e| e.to_str()).unwrap_or("img");
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::copy(src, &path)
                .map_err(|e| Error::Data(format!("copying {}: {e}", src.display())))?;
            Ok(path)
        }
    }
}

/// `path` relative to `base` when it lies inside it.
pub fn relative(path: &Path, base: &Path) -> PathBuf {
    path.strip_prefix(base)
        .map_or_else(|_| path.to_owned(), Path::to_owned)
}

/// Replaces characters that are awkward in file names.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}
