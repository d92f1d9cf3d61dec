//! HTTP client for out-of-process backend workers.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::*;
use super::{
    AbsentDetector, BackendError, BackendResult, Embedder, Embedding, Grounder, ImageOps,
    Inpainter, PromptRewriter,
};
use crate::domain::{BBox, BodyPart, ImageRef, PartDetection};

pub const TIMEOUT_ENV: &str = "CALIB_BACKEND_TIMEOUT_MS";
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

/// Per-call timeout from `CALIB_BACKEND_TIMEOUT_MS`, defaulting to 30 s.
pub fn timeout_from_env() -> Duration {
    let ms = std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .filter(|&ms| ms > 0)
        .unwrap_or(DEFAULT_TIMEOUT_MS);
    Duration::from_millis(ms)
}

pub struct RemoteBackend {
    base: String,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(endpoint: &str) -> Self {
        Self::with_timeout(endpoint, timeout_from_env())
    }

    pub fn with_timeout(endpoint: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self {
            base: endpoint.trim_end_matches('/').to_owned(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.base
    }

    fn call<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        op: &'static str,
        body: &Req,
    ) -> BackendResult<Resp> {
        let url = format!("{}/{op}", self.base);
        let mut resp =
            self.agent
                .post(&url)
                .send_json(body)
                .map_err(|e| BackendError::Unavailable {
                    backend: url.clone(),
                    message: e.to_string(),
                })?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Unavailable {
                backend: url.clone(),
                message: e.to_string(),
            })?;
        if !status.is_success() {
            let message = serde_json::from_str::<ErrorBody>(&text)
                .map(|b| b.error)
                .unwrap_or(text);
            return Err(if status.as_u16() == 422 || status.as_u16() == 400 {
                BackendError::Precondition { op, message }
            } else {
                BackendError::Unavailable {
                    backend: url,
                    message: format!("HTTP {status}: {message}"),
                }
            });
        }
        serde_json::from_str(&text).map_err(|e| BackendError::Protocol {
            op,
            message: e.to_string(),
        })
    }
}

fn handle(op: &'static str, image: &ImageRef) -> BackendResult<ImageHandle> {
    ImageHandle::from_image(image).map_err(|m| BackendError::precondition(op, m))
}

fn image(op: &'static str, h: ImageHandle) -> BackendResult<ImageRef> {
    h.into_image()
        .map_err(|message| BackendError::Protocol { op, message })
}

impl Grounder for RemoteBackend {
    fn ground(
        &self,
        img: &ImageRef,
        vocabulary: &[BodyPart],
        threshold: f64,
    ) -> BackendResult<Vec<PartDetection>> {
        if vocabulary.is_empty() {
            return Err(BackendError::precondition("ground", "empty vocabulary"));
        }
        let req = GroundRequest {
            image: handle("ground", img)?,
            vocabulary: vocabulary.to_vec(),
            threshold,
        };
        let resp: GroundResponse = self.call("ground", &req)?;
        // enforce the contract regardless of what the worker sent
        Ok(resp
            .detections
            .into_iter()
            .filter(|d| vocabulary.contains(&d.part) && d.score >= threshold)
            .collect())
    }
}

impl Inpainter for RemoteBackend {
    fn inpaint(&self, img: &ImageRef, region: BBox, prompt: &str) -> BackendResult<ImageRef> {
        if !region.fits_within(img.width(), img.height()) {
            return Err(BackendError::precondition(
                "inpaint",
                format!("region {region} out of bounds"),
            ));
        }
        let req = InpaintRequest {
            image: handle("inpaint", img)?,
            region,
            prompt: prompt.to_owned(),
        };
        let resp: ImageResponse = self.call("inpaint", &req)?;
        image("inpaint", resp.image)
    }
}

impl AbsentDetector for RemoteBackend {
    fn detect_absent(&self, img: &ImageRef) -> BackendResult<Option<(BodyPart, BBox)>> {
        let req = DetectAbsentRequest {
            image: handle("detect_absent", img)?,
        };
        let resp: DetectAbsentResponse = self.call("detect_absent", &req)?;
        Ok(resp.finding.map(|f| (f.part, f.bbox)))
    }
}

impl Embedder for RemoteBackend {
    fn embed_image(&self, img: &ImageRef) -> BackendResult<Embedding> {
        let req = EmbedRequest {
            image: Some(handle("embed", img)?),
            text: None,
        };
        let resp: EmbedResponse = self.call("embed", &req)?;
        Embedding::new(resp.values).map_err(|message| BackendError::Protocol {
            op: "embed",
            message,
        })
    }

    fn embed_text(&self, text: &str) -> BackendResult<Embedding> {
        let req = EmbedRequest {
            image: None,
            text: Some(text.to_owned()),
        };
        let resp: EmbedResponse = self.call("embed", &req)?;
        Embedding::new(resp.values).map_err(|message| BackendError::Protocol {
            op: "embed",
            message,
        })
    }
}

impl ImageOps for RemoteBackend {
    fn upscale(&self, img: &ImageRef, factor: u32) -> BackendResult<ImageRef> {
        let req = UpscaleRequest {
            image: handle("upscale", img)?,
            factor,
        };
        let resp: ImageResponse = self.call("upscale", &req)?;
        image("upscale", resp.image)
    }

    fn interpolate_video(
        &self,
        first: &ImageRef,
        last: &ImageRef,
        prompt: &str,
        frame_count: usize,
    ) -> BackendResult<Vec<ImageRef>> {
        if frame_count < 2 {
            return Err(BackendError::precondition(
                "interpolate",
                "frame_count must be >= 2",
            ));
        }
        let req = InterpolateRequest {
            first: handle("interpolate", first)?,
            last: handle("interpolate", last)?,
            prompt: prompt.to_owned(),
            frame_count,
        };
        let resp: InterpolateResponse = self.call("interpolate", &req)?;
        if resp.frames.len() != frame_count {
            return Err(BackendError::Protocol {
                op: "interpolate",
                message: format!("expected {frame_count} frames, got {}", resp.frames.len()),
            });
        }
        resp.frames
            .into_iter()
            .map(|h| image("interpolate", h))
            .collect()
    }
}

impl PromptRewriter for RemoteBackend {
    fn rewrite_human_prompt(&self, prompt: &str) -> BackendResult<String> {
        let resp: RewriteResponse = self.call(
            "rewrite",
            &RewriteRequest {
                prompt: prompt.to_owned(),
            },
        )?;
        Ok(resp.prompt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unreachable_worker_is_unavailable() {
        // port 9 (discard) on localhost is essentially never listening
        let r = RemoteBackend::with_timeout("http://127.0.0.1:9", Duration::from_millis(500));
        let img = ImageRef::from_file("a", 10, 10, "/tmp/a.png").unwrap();
        let err = r.ground(&img, &[BodyPart::Hand], 0.3).unwrap_err();
        assert!(matches!(err, BackendError::Unavailable { .. }), "{err}");
    }

    #[test]
    fn in_memory_scenes_cannot_be_sent() {
        let r = RemoteBackend::with_timeout("http://127.0.0.1:9", Duration::from_millis(500));
        let img = ImageRef::from_scene("s", crate::backends::SceneGraph::empty(10, 10));
        let err = r.detect_absent(&img).unwrap_err();
        assert!(matches!(err, BackendError::Precondition { .. }), "{err}");
    }
}
