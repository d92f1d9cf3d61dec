use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bodyaudit_core::backends::Role;
use bodyaudit_core::{Backends, Error, ImageRef, Pipeline, PipelineConfig, PromptTemplateSet};

use crate::args::GlobalArgs;

/// Resolved backend selection.
pub struct BackendChoice {
    pub backends: Backends,
    /// Some role is served remotely, so images must be passed by path.
    pub remote: bool,
}

pub fn parse_backends(
    specs: &[String],
    templates: &PromptTemplateSet,
) -> Result<BackendChoice, Error> {
    let mut backends = Backends::mock_with_templates(templates.clone());
    let mut remote = false;
    for spec in specs {
        if spec == "mock" {
            backends = Backends::mock_with_templates(templates.clone());
            remote = false;
            continue;
        }
        let (name, url) = spec
            .split_once(':')
            .filter(|(_, url)| !url.is_empty())
            .ok_or_else(|| {
                Error::Config(format!(
                    "backend `{spec}`: expected mock, remote:<url> or <role>:<url>"
                ))
            })?;
        if name == "remote" {
            backends = Backends::remote(url);
        } else {
            let role = Role::parse(name)
                .ok_or_else(|| Error::Config(format!("backend `{spec}`: unknown role `{name}`")))?;
            backends = backends.with_remote(role, url);
        }
        remote = true;
    }
    Ok(BackendChoice { backends, remote })
}

pub struct Setup {
    pub config: PipelineConfig,
    pub templates: PromptTemplateSet,
    pub choice: BackendChoice,
}

impl Setup {
    pub fn load(global: &GlobalArgs) -> Result<Self> {
        let config = match &global.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let templates = match &global.templates {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                let t: PromptTemplateSet = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                t.validate()?;
                t
            }
            None => PromptTemplateSet::default(),
        };
        if global.jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()).into());
        }
        let choice = parse_backends(&global.backends, &templates)?;
        Ok(Self {
            config,
            templates,
            choice,
        })
    }

    pub fn pipeline(&self) -> Result<Pipeline> {
        Ok(Pipeline::new(
            self.config.clone(),
            self.templates.clone(),
            self.choice.backends.clone(),
        )?)
    }

    pub fn open(&self, path: &Path) -> Result<ImageRef> {
        let img = if self.choice.remote {
            ImageRef::open_by_path(path)
        } else {
            ImageRef::open(path)
        };
        img.with_context(|| format!("opening {}", path.display()))
    }
}

const IMAGE_EXTENSIONS: [&str; 4] = ["json", "png", "jpg", "jpeg"];

/// The file itself, or the supported files of a directory in name order.
pub fn input_files(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_owned()]);
    }
    let entries =
        std::fs::read_dir(input).map_err(|e| Error::Data(format!("{}: {e}", input.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!("{}: no images found", input.display())).into());
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_specs() {
        let t = PromptTemplateSet::default();
        assert!(!parse_backends(&["mock".into()], &t).unwrap().remote);
        assert!(
            parse_backends(&["remote:http://x:1".into()], &t)
                .unwrap()
                .remote
        );
        assert!(
            parse_backends(&["ground:http://x:1".into()], &t)
                .unwrap()
                .remote
        );
        for bad in ["nonsense", "fly:http://x", "remote:"] {
            assert!(
                matches!(parse_backends(&[bad.into()], &t), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }
}
