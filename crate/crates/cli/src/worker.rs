//! A backend worker serving the mock world over the remote protocol, so the
//! HTTP path can be exercised end to end without real models.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use bodyaudit_core::backends::mock::MockWorld;
use bodyaudit_core::backends::wire::*;
use bodyaudit_core::backends::{
    AbsentDetector, BackendError, Embedder, Grounder, ImageOps, Inpainter, PromptRewriter,
};
use bodyaudit_core::{ImageRef, PromptTemplateSet};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::WorkerArgs;
use crate::artifacts::{file_stem, save_image};

struct Worker {
    world: MockWorld,
    work_dir: PathBuf,
    counter: AtomicU64,
}

type Shared = Arc<Worker>;

fn fail(status: StatusCode, message: String) -> Response {
    (status, Json(ErrorBody { error: message })).into_response()
}

impl Worker {
    fn input(&self, h: ImageHandle) -> Result<ImageRef, BackendError> {
        h.into_image()
            .map_err(|m| BackendError::precondition("worker", m))
    }

    fn output(&self, image: &ImageRef) -> Result<ImageHandle, BackendError> {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let stem = format!("{}-{n:06}", file_stem(image.id()));
        let path = std::fs::create_dir_all(&self.work_dir)
            .map_err(anyhow::Error::from)
            .and_then(|()| save_image(image, &self.work_dir, &stem))
            .map_err(|e| BackendError::Unavailable {
                backend: "mock worker".into(),
                message: e.to_string(),
            })?;
        let saved = ImageRef::from_file(image.id(), image.width(), image.height(), path)
            .map_err(|e| BackendError::precondition("worker", e.to_string()))?;
        ImageHandle::from_image(&saved).map_err(|m| BackendError::precondition("worker", m))
    }
}

fn handle<Req, Resp>(body: Bytes, f: impl FnOnce(Req) -> Result<Resp, BackendError>) -> Response
where
    Req: DeserializeOwned,
    Resp: Serialize,
{
    let req: Req = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return fail(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    };
    match f(req) {
        Ok(resp) => Json(resp).into_response(),
        Err(e @ BackendError::Precondition { .. }) => {
            fail(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
        }
        Err(e) => fail(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn ground(State(w): State<Shared>, body: Bytes) -> Response {
    handle(body, |r: GroundRequest| {
        let detections = w
            .world
            .ground(&w.input(r.image)?, &r.vocabulary, r.threshold)?;
        Ok(GroundResponse { detections })
    })
}

async fn inpaint(State(w): State<Shared>, body: Bytes) -> Response {
    handle(body, |r: InpaintRequest| {
        let out = w.world.inpaint(&w.input(r.image)?, r.region, &r.prompt)?;
        Ok(ImageResponse {
            image: w.output(&out)?,
        })
    })
}

async fn detect_absent(State(w): State<Shared>, body: Bytes) -> Response {
    handle(body, |r: DetectAbsentRequest| {
        let finding = w
            .world
            .detect_absent(&w.input(r.image)?)?
            .map(|(part, bbox)| AbsentFinding { part, bbox });
        Ok(DetectAbsentResponse { finding })
    })
}

async fn embed(State(w): State<Shared>, body: Bytes) -> Response {
    handle(body, |r: EmbedRequest| {
        let e = match (r.image, r.text) {
            (Some(h), None) => w.world.embed_image(&w.input(h)?)?,
            (None, Some(t)) => w.world.embed_text(&t)?,
            _ => {
                return Err(BackendError::precondition(
                    "embed",
                    "send exactly one of image or text",
                ))
            }
        };
        Ok(EmbedResponse {
            values: e.values().to_vec(),
        })
    })
}

async fn upscale(State(w): State<Shared>, body: Bytes) -> Response {
    handle(body, |r: UpscaleRequest| {
        let out = w.world.upscale(&w.input(r.image)?, r.factor)?;
        Ok(ImageResponse {
            image: w.output(&out)?,
        })
    })
}

async fn interpolate(State(w): State<Shared>, body: Bytes) -> Response {
    handle(body, |r: InterpolateRequest| {
        let frames = w.world.interpolate_video(
            &w.input(r.first)?,
            &w.input(r.last)?,
            &r.prompt,
            r.frame_count,
        )?;
        let frames = frames
            .iter()
            .map(|f| w.output(f))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(InterpolateResponse { frames })
    })
}

async fn rewrite(State(w): State<Shared>, body: Bytes) -> Response {
    handle(body, |r: RewriteRequest| {
        Ok(RewriteResponse {
            prompt: w.world.rewrite_human_prompt(&r.prompt)?,
        })
    })
}

pub fn router(templates: PromptTemplateSet, work_dir: PathBuf) -> Router {
    let worker = Worker {
        world: MockWorld::new(templates),
        work_dir,
        counter: AtomicU64::new(0),
    };
    Router::new()
        .route("/ground", post(ground))
        .route("/inpaint", post(inpaint))
        .route("/detect_absent", post(detect_absent))
        .route("/embed", post(embed))
        .route("/upscale", post(upscale))
        .route("/interpolate", post(interpolate))
        .route("/rewrite", post(rewrite))
        .with_state(Arc::new(worker))
}

pub fn serve(args: &WorkerArgs, templates: PromptTemplateSet) -> Result<()> {
    let app = router(templates, args.work_dir.clone());
    let rt = tokio::runtime::Runtime::new().context("starting async runtime")?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.addr)
            .await
            .with_context(|| format!("binding {}", args.addr))?;
        eprintln!(
            "mock backend worker listening on http://{}",
            listener.local_addr()?
        );
        axum::serve(listener, app).await.context("backend worker")
    })
}
