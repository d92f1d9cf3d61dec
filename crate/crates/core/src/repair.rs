//! Replays detected abnormalities as inpainting steps on the original image.

use serde::{Deserialize, Serialize};

use crate::backends::Backends;
use crate::domain::{
    AbnormalityLabel, BBox, DetectionResult, ImageRef, PipelineConfig, PromptTemplateSet,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairStep {
    pub label: AbnormalityLabel,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub prompt: String,
}

/// Ordered repairs: every redundant-part removal, then every absent-part
/// completion, each stage in detection order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairPlan {
    pub source_result: String,
    pub steps: Vec<RepairStep>,
}

impl RepairPlan {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub fn build_plan(result: &DetectionResult, templates: &PromptTemplateSet) -> Result<RepairPlan> {
    if !result.is_ordered() {
        return Err(Error::Precondition(format!(
            "result `{}` lists an absent finding before a redundant one",
            result.image_id()
        )));
    }
    Ok(RepairPlan {
        source_result: result.image_id().to_owned(),
        steps: result
            .findings()
            .iter()
            .map(|f| RepairStep {
                label: f.label(),
                bbox: f.bbox(),
                prompt: templates.render(f.label()),
            })
            .collect(),
    })
}

/// Folds the plan over `original`, inpainting each expanded step box, then
/// upscales once if super-resolution is enabled.
pub fn execute_plan(
    original: &ImageRef,
    plan: &RepairPlan,
    config: &PipelineConfig,
    backends: &Backends,
) -> Result<ImageRef> {
    for (i, step) in plan.steps.iter().enumerate() {
        if !step.bbox.fits_within(original.width(), original.height()) {
            return Err(Error::Precondition(format!(
                "step {i}: box {} outside {}x{}",
                step.bbox,
                original.width(),
                original.height()
            )));
        }
    }
    let mut current = original.clone();
    for (i, step) in plan.steps.iter().enumerate() {
        let region = step.bbox.expand(
            config.box_expansion_ratio,
            current.width(),
            current.height(),
        );
        current = backends
            .inpainter
            .inpaint(&current, region, &step.prompt)
            .map_err(|e| Error::backend(format!("repair step {i} ({})", step.label), e))?;
    }
    if config.enable_superresolution {
        current = backends
            .image_ops
            .upscale(&current, config.superresolution_factor)
            .map_err(|e| Error::backend("repair: super-resolution", e))?;
    }
    Ok(current)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportStep {
    pub label: AbnormalityLabel,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub expanded_box: BBox,
    pub prompt: String,
}

/// Machine-readable summary of what a repair did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub image_id: String,
    pub steps: Vec<ReportStep>,
    pub superresolution: bool,
}

impl RepairReport {
    pub fn new(original: &ImageRef, plan: &RepairPlan, config: &PipelineConfig) -> Self {
        Self {
            image_id: original.id().to_owned(),
            steps: plan
                .steps
                .iter()
                .map(|s| ReportStep {
                    label: s.label,
                    bbox: s.bbox,
                    expanded_box: s.bbox.expand(
                        config.box_expansion_ratio,
                        original.width(),
                        original.height(),
                    ),
                    prompt: s.prompt.clone(),
                })
                .collect(),
            superresolution: config.enable_superresolution,
        }
    }
}
