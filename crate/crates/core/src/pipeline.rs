use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::absent::{detect_absent_cyclic, AbsentLoopState};
use crate::backends::Backends;
use crate::domain::{DetectionResult, ImageRef, PipelineConfig, PromptTemplateSet};
use crate::error::{Error, Result};
use crate::redundant::{detect_redundant, RedundancyProbe};
use crate::repair::{build_plan, execute_plan, RepairPlan, RepairReport};

/// Everything the two detection stages produced for one image.
#[derive(Debug, Clone)]
pub struct Detection {
    pub result: DetectionResult,
    pub probes: Vec<RedundancyProbe>,
    pub absent_loop: AbsentLoopState,
}

#[derive(Debug, Clone)]
pub struct Repair {
    pub plan: RepairPlan,
    pub report: RepairReport,
    pub image: ImageRef,
}

/// Wall-clock time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub redundant_ms: f64,
    pub absent_ms: f64,
    pub repair_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub detection: Detection,
    pub repair: Repair,
    pub timings: StageTimings,
}

fn millis(d: Duration) -> f64 {
    // floor at one microsecond so a recorded stage is never zero
    (d.as_secs_f64() * 1e3).max(1e-3)
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    templates: PromptTemplateSet,
    backends: Backends,
}

impl Pipeline {
    pub fn new(
        config: PipelineConfig,
        templates: PromptTemplateSet,
        backends: Backends,
    ) -> Result<Self> {
        config.validate()?;
        templates.validate()?;
        Ok(Self {
            config,
            templates,
            backends,
        })
    }

    /// Default configuration over the mock world.
    pub fn mock() -> Self {
        Self::new(
            PipelineConfig::default(),
            PromptTemplateSet::default(),
            Backends::mock(),
        )
        .expect("defaults are valid")
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn templates(&self) -> &PromptTemplateSet {
        &self.templates
    }

    pub fn backends(&self) -> &Backends {
        &self.backends
    }

    pub fn detect(&self, image: &ImageRef) -> Result<Detection> {
        self.detect_timed(image).map(|(d, _)| d)
    }

    /// Detection plus per-stage wall-clock time; `repair_ms` is left at 0.
    pub fn detect_timed(&self, image: &ImageRef) -> Result<(Detection, StageTimings)> {
        let started = Instant::now();
        let redundant = detect_redundant(image, &self.config, &self.templates, &self.backends)?;

        // The absent loop works on a copy with the redundant parts already
        // painted out; repairs later replay from the untouched original.
        let mut base = image.clone();
        for f in &redundant.findings {
            let region =
                f.bbox()
                    .expand(self.config.box_expansion_ratio, base.width(), base.height());
            base = self
                .backends
                .inpainter
                .inpaint(&base, region, &self.templates.render(f.label()))
                .map_err(|e| {
                    Error::backend(format!("redundant stage: removing {}", f.label()), e)
                })?;
        }
        let redundant_ms = millis(started.elapsed());

        let started = Instant::now();
        let absent_loop = detect_absent_cyclic(
            &base,
            &redundant.findings,
            &self.config,
            &self.templates,
            &self.backends,
        )?;
        let absent_ms = millis(started.elapsed());

        let result = DetectionResult::new(
            image.id(),
            redundant.findings,
            absent_loop.accepted.clone(),
            absent_loop.current_image.clone(),
        );
        Ok((
            Detection {
                result,
                probes: redundant.probes,
                absent_loop,
            },
            StageTimings {
                redundant_ms,
                absent_ms,
                repair_ms: 0.0,
            },
        ))
    }

    pub fn repair(&self, original: &ImageRef, result: &DetectionResult) -> Result<Repair> {
        if result.image_id() != original.id() {
            return Err(Error::Precondition(format!(
                "result is for `{}` but the image is `{}`",
                result.image_id(),
                original.id()
            )));
        }
        let plan = build_plan(result, &self.templates)?;
        let image = execute_plan(original, &plan, &self.config, &self.backends)?;
        let report = RepairReport::new(original, &plan, &self.config);
        Ok(Repair {
            plan,
            report,
            image,
        })
    }

    /// Detection followed by repair.
    pub fn run(&self, image: &ImageRef) -> Result<RunOutput> {
        let (detection, mut timings) = self.detect_timed(image)?;
        let started = Instant::now();
        let repair = self.repair(image, &detection.result)?;
        timings.repair_ms = millis(started.elapsed());
        Ok(RunOutput {
            detection,
            repair,
            timings,
        })
    }

    /// Repairs the first and last frames independently, then regenerates
    /// the clip between them with the keyframe interpolator.
    pub fn repair_video(
        &self,
        first: &ImageRef,
        last: &ImageRef,
        prompt: &str,
        frame_count: usize,
    ) -> Result<Vec<ImageRef>> {
        if frame_count < 2 {
            return Err(Error::Precondition(
                "video repair needs at least 2 frames".into(),
            ));
        }
        let (first_fixed, last_fixed) = std::thread::scope(|s| {
            let a = s.spawn(|| self.run(first));
            let b = s.spawn(|| self.run(last));
            (
                a.join().expect("first-frame worker panicked"),
                b.join().expect("last-frame worker panicked"),
            )
        });
        let first_fixed = first_fixed
            .map_err(|e| e.context(format!("first frame `{}`", first.id())))?
            .repair
            .image;
        let last_fixed = last_fixed
            .map_err(|e| e.context(format!("last frame `{}`", last.id())))?
            .repair
            .image;
        self.backends
            .image_ops
            .interpolate_video(&first_fixed, &last_fixed, prompt, frame_count)
            .map_err(|e| Error::backend("video repair: interpolation", e))
    }
}
