use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetManifest, ManifestRecord};
use crate::backends::Backends;
use crate::domain::{
    AbnormalityFinding, BBox, BodyPart, ImageRef, PartDetection, PipelineConfig, PromptFamily,
    PromptTemplateSet,
};
use crate::error::{Error, Result};

/// Instruction paired with every absent-detector training target.
pub const ABSENT_INSTRUCTION: &str = "Is any body part of the person in this image absent? \
If so, answer with the absent part and its bounding box as \
[x_min,y_min,x_max,y_max] normalized to the image size.";

/// An image with one part painted out, and the finding that should be
/// reported for it.
#[derive(Debug, Clone)]
pub struct AbsentSample {
    pub source_image: ImageRef,
    pub masked_image: ImageRef,
    pub ground_truth: AbnormalityFinding,
}

impl AbsentSample {
    pub fn manifest_record(&self) -> ManifestRecord {
        ManifestRecord::AbsentSample {
            source_image: self.source_image.id().to_owned(),
            masked_image: self.masked_image.id().to_owned(),
            masked_path: self.masked_image.path().map(ToOwned::to_owned),
            ground_truth: self.ground_truth,
        }
    }
}

fn ground_all(
    image: &ImageRef,
    config: &PipelineConfig,
    backends: &Backends,
) -> Result<Vec<PartDetection>> {
    backends
        .grounder
        .ground(image, &BodyPart::ALL, config.grounding_threshold)
        .map_err(|e| Error::backend(format!("grounding `{}`", image.id()), e))
}

fn mask(
    image: &ImageRef,
    det: &PartDetection,
    templates: &PromptTemplateSet,
    backends: &Backends,
) -> Result<AbsentSample> {
    let prompt = templates.render_family(PromptFamily::RedundantRemoval, det.part);
    let masked = backends
        .inpainter
        .inpaint(image, det.bbox, &prompt)
        .map_err(|e| Error::backend(format!("masking {} in `{}`", det.part, image.id()), e))?;
    let masked = masked.with_id(format!(
        "{}-no-{}-{}",
        image.id(),
        det.part,
        det.bbox.as_array().map(|v| v.to_string()).join("_")
    ));
    Ok(AbsentSample {
        source_image: image.clone(),
        masked_image: masked,
        ground_truth: AbnormalityFinding::absent(det.part, det.bbox, 0),
    })
}

/// Paints out the `part_index`-th grounded part. `Ok(None)` means the image
/// has no grounded parts and should be skipped.
pub fn build_absent_sample(
    image: &ImageRef,
    part_index: usize,
    config: &PipelineConfig,
    templates: &PromptTemplateSet,
    backends: &Backends,
) -> Result<Option<AbsentSample>> {
    let detections = ground_all(image, config, backends)?;
    if detections.is_empty() {
        return Ok(None);
    }
    let det = detections.get(part_index).ok_or_else(|| {
        Error::Precondition(format!(
            "`{}` has {} grounded parts, index {part_index} requested",
            image.id(),
            detections.len()
        ))
    })?;
    mask(image, det, templates, backends).map(Some)
}

/// Whether the masked part is gone: nothing of its class grounds inside the
/// ground-truth box.
pub fn mask_is_effective(
    sample: &AbsentSample,
    config: &PipelineConfig,
    backends: &Backends,
) -> Result<bool> {
    let gt = sample.ground_truth.bbox();
    let found = backends
        .grounder
        .ground(
            &sample.masked_image,
            &[sample.ground_truth.part()],
            config.presence_threshold,
        )
        .map_err(|e| Error::backend("mask check", e))?;
    Ok(!found
        .iter()
        .any(|d| d.bbox.coverage_by(&gt) >= 0.5 || d.bbox.iou(&gt) >= config.match_iou))
}

/// One masked sample per image, the masked part drawn with `seed`.
/// Images that fail or have no parts are logged and counted as skipped.
pub fn build_eval_split(
    name: &str,
    images: &[ImageRef],
    config: &PipelineConfig,
    templates: &PromptTemplateSet,
    backends: &Backends,
    seed: u64,
) -> (DatasetManifest, Vec<AbsentSample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    let mut skipped = 0;
    for image in images {
        let outcome = ground_all(image, config, backends).and_then(|dets| {
            if dets.is_empty() {
                return Ok(None);
            }
            let det = dets[rng.random_range(0..dets.len())];
            mask(image, &det, templates, backends).map(Some)
        });
        match outcome {
            Ok(Some(s)) => samples.push(s),
            Ok(None) => {
                tracing::info!(image = image.id(), "no grounded parts, skipping");
                skipped += 1;
            }
            Err(e) => {
                tracing::warn!(image = image.id(), error = %e, "sample construction failed, skipping");
                skipped += 1;
            }
        }
    }
    let records = samples.iter().map(AbsentSample::manifest_record).collect();
    (
        DatasetManifest::new(name, "eval", records, skipped),
        samples,
    )
}

/// A masked image with its instruction and textual target.
#[derive(Debug, Clone)]
pub struct TrainingRecord {
    pub image: ImageRef,
    pub instruction: String,
    pub target: String,
}

impl TrainingRecord {
    pub fn line(&self, image_path: impl Into<String>) -> TrainingLine {
        TrainingLine {
            image_path: image_path.into(),
            instruction: self.instruction.clone(),
            target: self.target.clone(),
        }
    }

    pub fn parse_target(&self) -> Result<(BodyPart, BBox)> {
        parse_target(&self.target, self.image.width(), self.image.height())
    }
}

/// One line of the training JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingLine {
    pub image_path: String,
    pub instruction: String,
    pub target: String,
}

/// Every grounded part of every image, masked one at a time.
pub fn generate_training_records(
    images: &[ImageRef],
    config: &PipelineConfig,
    templates: &PromptTemplateSet,
    backends: &Backends,
) -> (Vec<TrainingRecord>, usize) {
    let mut records = Vec::new();
    let mut skipped = 0;
    for image in images {
        let built: Result<Vec<TrainingRecord>> =
            ground_all(image, config, backends).and_then(|dets| {
                dets.iter()
                    .map(|det| {
                        let s = mask(image, det, templates, backends)?;
                        Ok(TrainingRecord {
                            target: format_target(
                                det.part,
                                det.bbox,
                                image.width(),
                                image.height(),
                            ),
                            instruction: ABSENT_INSTRUCTION.to_owned(),
                            image: s.masked_image,
                        })
                    })
                    .collect()
            });
        match built {
            Ok(r) if r.is_empty() => skipped += 1,
            Ok(r) => records.extend(r),
            Err(e) => {
                tracing::warn!(image = image.id(), error = %e, "training record generation failed, skipping");
                skipped += 1;
            }
        }
    }
    (records, skipped)
}

/// `absent {part} [x0,y0,x1,y1]` with coordinates normalized to the image
/// and printed to three decimals. Exact to the pixel for images up to 1000
/// pixels on a side.
pub fn format_target(part: BodyPart, bbox: BBox, width: u32, height: u32) -> String {
    let nx = |v: u32| f64::from(v) / f64::from(width);
    let ny = |v: u32| f64::from(v) / f64::from(height);
    format!(
        "absent {part} [{:.3},{:.3},{:.3},{:.3}]",
        nx(bbox.x_min()),
        ny(bbox.y_min()),
        nx(bbox.x_max()),
        ny(bbox.y_max())
    )
}

pub fn parse_target(text: &str, width: u32, height: u32) -> Result<(BodyPart, BBox)> {
    let bad = |why: &str| Error::Data(format!("training target `{text}`: {why}"));
    let rest = text
        .strip_prefix("absent ")
        .ok_or_else(|| bad("missing `absent` prefix"))?;
    let (part, coords) = rest.split_once(' ').ok_or_else(|| bad("missing box"))?;
    let part: BodyPart = part.parse().map_err(|e: String| bad(&e))?;
    let inner = coords
        .strip_prefix('[')
        .and_then(|c| c.strip_suffix(']'))
        .ok_or_else(|| bad("box must be bracketed"))?;
    let vals: Vec<f64> = inner
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad("non-numeric coordinate"))
        })
        .collect::<Result<_>>()?;
    if vals.len() != 4 || vals.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(bad("expected four coordinates in [0,1]"));
    }
    let px = |v: f64, extent: u32| (v * f64::from(extent)).round() as u32;
    let bbox = BBox::new(
        px(vals[0], width),
        px(vals[1], height),
        px(vals[2], width),
        px(vals[3], height),
    )
    .map_err(|e| bad(&e))?;
    Ok((part, bbox))
}
