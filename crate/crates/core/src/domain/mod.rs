//! Shared vocabulary: body-part taxonomy, boxes, findings, prompt templates,
//! pipeline configuration and image handles.

mod config;
mod finding;
mod geometry;
mod image;
mod prompt;
mod taxonomy;

pub use config::PipelineConfig;
pub use finding::{AbnormalityFinding, DetectionResult, PartDetection, Stage};
pub use geometry::BBox;
pub use image::{ImageRef, Payload};
pub use prompt::{PromptFamily, PromptTemplateSet, PART_PLACEHOLDER};
pub use taxonomy::{AbnormalityKind, AbnormalityLabel, BodyPart};
