//! Model-backend contracts and their implementations.
//!
//! Every neural model the pipeline needs sits behind one of the traits here.
//! [`mock`] implements all of them over [`SceneGraph`] fixtures; [`remote`]
//! forwards each call to an out-of-process worker over HTTP/JSON.

pub mod mock;
pub mod remote;
mod scene;
pub mod wire;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{BBox, BodyPart, ImageRef, PartDetection, PromptTemplateSet};

pub use scene::{AbsentSlot, CanonicalAnatomy, PartNode, PersonNode, SceneGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend `{backend}` unavailable: {message}")]
    Unavailable { backend: String, message: String },
    #[error("`{op}` precondition failed: {message}")]
    Precondition { op: &'static str, message: String },
    #[error("`{op}` returned a malformed response: {message}")]
    Protocol { op: &'static str, message: String },
}

impl BackendError {
    pub fn precondition(op: &'static str, message: impl Into<String>) -> Self {
        BackendError::Precondition {
            op,
            message: message.into(),
        }
    }
}

pub type BackendResult<T> = Result<T, BackendError>;

/// Fixed-length embedding in a joint image/text space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self, String> {
        if values.is_empty() {
            return Err("embedding must have positive dimension".into());
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err("embedding has non-finite entries".into());
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Cosine similarity; 0 when either vector is zero.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        assert_eq!(self.dim(), other.dim(), "embedding dimensions differ");
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            0.0
        } else {
            (dot / denom).clamp(-1.0, 1.0)
        }
    }
}

/// Open-vocabulary grounding of body parts.
pub trait Grounder: Send + Sync {
    /// Every returned detection has `part` in `vocabulary` and
    /// `score >= threshold`.
    fn ground(
        &self,
        image: &ImageRef,
        vocabulary: &[BodyPart],
        threshold: f64,
    ) -> BackendResult<Vec<PartDetection>>;
}

/// Text-conditioned region inpainting. Returns a new image; the input is
/// never modified.
pub trait Inpainter: Send + Sync {
    fn inpaint(&self, image: &ImageRef, region: BBox, prompt: &str) -> BackendResult<ImageRef>;
}

/// Detector of missing body parts. Reports at most one finding per call.
pub trait AbsentDetector: Send + Sync {
    fn detect_absent(&self, image: &ImageRef) -> BackendResult<Option<(BodyPart, BBox)>>;
}

pub trait Embedder: Send + Sync {
    fn embed_image(&self, image: &ImageRef) -> BackendResult<Embedding>;
    fn embed_text(&self, text: &str) -> BackendResult<Embedding>;
}

/// Super-resolution and keyframe interpolation.
pub trait ImageOps: Send + Sync {
    fn upscale(&self, image: &ImageRef, factor: u32) -> BackendResult<ImageRef>;

    /// Returns `frame_count` frames; the first equals `first` and the last
    /// equals `last`.
    fn interpolate_video(
        &self,
        first: &ImageRef,
        last: &ImageRef,
        prompt: &str,
        frame_count: usize,
    ) -> BackendResult<Vec<ImageRef>>;
}

/// Reduces a generation prompt to its human-related clauses.
pub trait PromptRewriter: Send + Sync {
    fn rewrite_human_prompt(&self, prompt: &str) -> BackendResult<String>;
}

/// The full set of backends a pipeline run uses.
#[derive(Clone)]
pub struct Backends {
    pub grounder: Arc<dyn Grounder>,
    pub inpainter: Arc<dyn Inpainter>,
    pub absent_detector: Arc<dyn AbsentDetector>,
    pub embedder: Arc<dyn Embedder>,
    pub image_ops: Arc<dyn ImageOps>,
    pub rewriter: Arc<dyn PromptRewriter>,
}

impl Backends {
    /// Mock world with the default prompt templates.
    pub fn mock() -> Self {
        Self::mock_with_templates(PromptTemplateSet::default())
    }

    pub fn mock_with_templates(templates: PromptTemplateSet) -> Self {
        let world = Arc::new(mock::MockWorld::new(templates));
        Self {
            grounder: world.clone(),
            inpainter: world.clone(),
            absent_detector: world.clone(),
            embedder: world.clone(),
            image_ops: world.clone(),
            rewriter: world,
        }
    }

    /// Every backend served by one remote worker.
    pub fn remote(endpoint: &str) -> Self {
        let r = Arc::new(remote::RemoteBackend::new(endpoint));
        Self {
            grounder: r.clone(),
            inpainter: r.clone(),
            absent_detector: r.clone(),
            embedder: r.clone(),
            image_ops: r.clone(),
            rewriter: r,
        }
    }
}

impl fmt::Debug for Backends {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Backends").finish_non_exhaustive()
    }
}

/// Backend roles, as named on the command line and in the wire protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Ground,
    Inpaint,
    DetectAbsent,
    Embed,
    ImageOps,
    Rewrite,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Ground,
        Role::Inpaint,
        Role::DetectAbsent,
        Role::Embed,
        Role::ImageOps,
        Role::Rewrite,
    ];

    pub fn parse(name: &str) -> Option<Role> {
        Some(match name {
            "ground" => Role::Ground,
            "inpaint" => Role::Inpaint,
            "detect_absent" | "detect-absent" => Role::DetectAbsent,
            "embed" => Role::Embed,
            "image_ops" | "upscale" | "interpolate" => Role::ImageOps,
            "rewrite" => Role::Rewrite,
            _ => return None,
        })
    }
}

impl Backends {
    /// Points a single role at a remote worker.
    pub fn with_remote(mut self, role: Role, endpoint: &str) -> Self {
        let r = Arc::new(remote::RemoteBackend::new(endpoint));
        match role {
            Role::Ground => self.grounder = r,
            Role::Inpaint => self.inpainter = r,
            Role::DetectAbsent => self.absent_detector = r,
            Role::Embed => self.embedder = r,
            Role::ImageOps => self.image_ops = r,
            Role::Rewrite => self.rewriter = r,
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_basics() {
        let a = Embedding::new(vec![1.0, 0.0]).unwrap();
        let b = Embedding::new(vec![0.0, 3.0]).unwrap();
        assert_eq!(a.cosine(&a), 1.0);
        assert_eq!(a.cosine(&b), 0.0);
        assert!(Embedding::new(vec![]).is_err());
        assert!(Embedding::new(vec![f64::NAN]).is_err());
    }
}
