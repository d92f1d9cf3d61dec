use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backends::SceneGraph;
use crate::error::{Error, Result};

/// What an [`ImageRef`] points at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    /// A file on disk: a raster image, or a scene fixture (`.json`).
    File { path: PathBuf },
    /// An in-memory mock-world scene.
    Scene { scene: Arc<SceneGraph> },
}

/// Immutable handle to one image. Backends never mutate an image; edits
/// produce a new handle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ImageRefWire")]
pub struct ImageRef {
    id: String,
    width: u32,
    height: u32,
    payload: Payload,
}

#[derive(Deserialize)]
struct ImageRefWire {
    id: String,
    width: u32,
    height: u32,
    payload: Payload,
}

impl TryFrom<ImageRefWire> for ImageRef {
    type Error = String;

    fn try_from(w: ImageRefWire) -> Result<Self, String> {
        if w.width == 0 || w.height == 0 {
            return Err(format!("image `{}` has zero extent", w.id));
        }
        Ok(ImageRef {
            id: w.id,
            width: w.width,
            height: w.height,
            payload: w.payload,
        })
    }
}

impl ImageRef {
    pub fn from_file(
        id: impl Into<String>,
        width: u32,
        height: u32,
        path: impl Into<PathBuf>,
    ) -> Result<Self> {
        let id = id.into();
        if width == 0 || height == 0 {
            return Err(Error::Precondition(format!("image `{id}` has zero extent")));
        }
        Ok(Self {
            id,
            width,
            height,
            payload: Payload::File { path: path.into() },
        })
    }

    pub fn from_scene(id: impl Into<String>, scene: SceneGraph) -> Self {
        Self {
            id: id.into(),
            width: scene.width,
            height: scene.height,
            payload: Payload::Scene {
                scene: Arc::new(scene),
            },
        }
    }

    /// Opens an image file. Scene fixtures (`*.json`) are parsed eagerly and
    /// held in memory; raster files are only probed for their dimensions.
    pub fn open(path: &Path) -> Result<Self> {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        if is_scene_path(path) {
            let scene = SceneGraph::load(path)?;
            return Ok(Self::from_scene(id, scene));
        }
        let (w, h) = image::image_dimensions(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Self::from_file(id, w, h, path)
    }

    /// Like [`ImageRef::open`] but never loads the payload, so the image can
    /// be handed to out-of-process backends by path.
    pub fn open_by_path(path: &Path) -> Result<Self> {
        let mut img = Self::open(path)?;
        img.payload = Payload::File {
            path: path.to_path_buf(),
        };
        Ok(img)
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.payload {
            Payload::File { path } => Some(path),
            Payload::Scene { .. } => None,
        }
    }

    /// The mock-world scene behind this image, loading it from disk when the
    /// payload is a scene fixture path.
    pub fn scene(&self) -> Result<Arc<SceneGraph>> {
        match &self.payload {
            Payload::Scene { scene } => Ok(Arc::clone(scene)),
            Payload::File { path } if is_scene_path(path) => Ok(Arc::new(SceneGraph::load(path)?)),
            Payload::File { path } => Err(Error::Precondition(format!(
                "image `{}` ({}) is not a mock-world scene",
                self.id,
                path.display()
            ))),
        }
    }

    /// Same image content under a new id.
    pub fn with_id(&self, id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..self.clone()
        }
    }
}

fn is_scene_path(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
