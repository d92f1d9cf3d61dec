//! JSON bodies of the remote-backend protocol.
//!
//! Each backend operation is a `POST` to `/ground`, `/inpaint`,
//! `/detect_absent`, `/embed`, `/upscale`, `/interpolate` or `/rewrite`.
//! Images travel as [`ImageHandle`]s (id, size, path), never inline.
//! Failures are answered with a non-2xx status and an [`ErrorBody`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::domain::{BBox, BodyPart, ImageRef, PartDetection, Payload};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageHandle {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub path: PathBuf,
}

impl ImageHandle {
    pub fn from_image(image: &ImageRef) -> Result<Self, String> {
        match image.payload() {
            Payload::File { path } => Ok(Self {
                id: image.id().to_owned(),
                width: image.width(),
                height: image.height(),
                path: path.clone(),
            }),
            Payload::Scene { .. } => Err(format!(
                "image `{}` is held in memory and has no path to send",
                image.id()
            )),
        }
    }

    pub fn into_image(self) -> Result<ImageRef, String> {
        ImageRef::from_file(self.id, self.width, self.height, self.path).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundRequest {
    pub image: ImageHandle,
    pub vocabulary: Vec<BodyPart>,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundResponse {
    pub detections: Vec<PartDetection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InpaintRequest {
    pub image: ImageHandle,
    pub region: BBox,
    pub prompt: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageResponse {
    pub image: ImageHandle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectAbsentRequest {
    pub image: ImageHandle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsentFinding {
    pub part: BodyPart,
    #[serde(rename = "box")]
    pub bbox: BBox,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectAbsentResponse {
    pub finding: Option<AbsentFinding>,
}

/// Exactly one of `image` / `text` is set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EmbedRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageHandle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpscaleRequest {
    pub image: ImageHandle,
    pub factor: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterpolateRequest {
    pub first: ImageHandle,
    pub last: ImageHandle,
    pub prompt: String,
    pub frame_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterpolateResponse {
    pub frames: Vec<ImageHandle>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewriteRequest {
    pub prompt: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewriteResponse {
    pub prompt: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
