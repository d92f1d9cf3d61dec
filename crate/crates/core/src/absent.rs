//! Cyclic detection of missing parts.
//!
//! The absent-part detector reports one missing part per pass. Each
//! accepted report is inpainted into the working image before the next
//! pass, so the detector sees its earlier findings as fixed. Two gates can
//! reject a report, which also ends the loop:
//!
//! * it overlaps a redundant finding of the same class (the detector is
//!   re-reading a part that the redundant stage just removed);
//! * the grounding model already sees that part inside the reported box.

use serde::{Deserialize, Serialize};

use crate::backends::Backends;
use crate::domain::{
    AbnormalityFinding, AbnormalityKind, BBox, BodyPart, ImageRef, PipelineConfig,
    PromptTemplateSet,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    AlreadyPresent,
    MatchesRedundant,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopAction {
    Accepted,
    Discarded,
    Terminated,
}

/// One line of the loop trace log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopTraceLine {
    pub iteration: u32,
    pub action: LoopAction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub part: Option<BodyPart>,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<DiscardReason>,
}

#[derive(Debug, Clone)]
pub struct AbsentLoopState {
    pub iteration: u32,
    pub current_image: ImageRef,
    pub accepted: Vec<AbnormalityFinding>,
    pub discarded: Vec<(AbnormalityFinding, DiscardReason)>,
    pub detector_calls: u32,
    pub trace: Vec<LoopTraceLine>,
}

impl AbsentLoopState {
    fn new(image: &ImageRef) -> Self {
        Self {
            iteration: 0,
            current_image: image.clone(),
            accepted: Vec::new(),
            discarded: Vec::new(),
            detector_calls: 0,
            trace: Vec::new(),
        }
    }

    fn discard(&mut self, finding: AbnormalityFinding, reason: DiscardReason) {
        self.trace.push(LoopTraceLine {
            iteration: self.iteration,
            action: LoopAction::Discarded,
            part: Some(finding.part()),
            bbox: Some(finding.bbox()),
            reason: Some(reason),
        });
        self.discarded.push((finding, reason));
    }
}

pub fn detect_absent_cyclic(
    image: &ImageRef,
    redundant_findings: &[AbnormalityFinding],
    config: &PipelineConfig,
    templates: &PromptTemplateSet,
    backends: &Backends,
) -> Result<AbsentLoopState> {
    if let Some(f) = redundant_findings
        .iter()
        .find(|f| f.kind() != AbnormalityKind::Redundant)
    {
        return Err(Error::Precondition(format!(
            "absent loop given a non-redundant finding ({})",
            f.label()
        )));
    }

    let mut state = AbsentLoopState::new(image);
    loop {
        let at = |it: u32| format!("absent stage: iteration {it}");
        let report = backends
            .absent_detector
            .detect_absent(&state.current_image)
            .map_err(|e| Error::backend(at(state.iteration), e))?;
        state.detector_calls += 1;

        let Some((part, bbox)) = report else {
            state.trace.push(LoopTraceLine {
                iteration: state.iteration,
                action: LoopAction::Terminated,
                part: None,
                bbox: None,
                reason: None,
            });
            break;
        };
        let finding = AbnormalityFinding::absent(part, bbox, state.iteration);

        if state.iteration >= config.max_absent_iterations {
            state.discard(finding, DiscardReason::MaxIterations);
            break;
        }

        if redundant_findings
            .iter()
            .any(|r| r.part() == part && r.bbox().iou(&bbox) >= config.overlap_iou)
        {
            state.discard(finding, DiscardReason::MatchesRedundant);
            state.iteration += 1;
            break;
        }

        let present = backends
            .grounder
            .ground(&state.current_image, &[part], config.presence_threshold)
            .map_err(|e| Error::backend(at(state.iteration), e))?
            .iter()
            .any(|d| d.part == part && d.bbox.iou(&bbox) >= config.match_iou);
        if present {
            state.discard(finding, DiscardReason::AlreadyPresent);
            state.iteration += 1;
            break;
        }

        state.trace.push(LoopTraceLine {
            iteration: state.iteration,
            action: LoopAction::Accepted,
            part: Some(part),
            bbox: Some(bbox),
            reason: None,
        });
        state.accepted.push(finding);
        let region = bbox.expand(
            config.box_expansion_ratio,
            state.current_image.width(),
            state.current_image.height(),
        );
        state.current_image = backends
            .inpainter
            .inpaint(
                &state.current_image,
                region,
                &templates.render(finding.label()),
            )
            .map_err(|e| Error::backend(at(state.iteration), e))?;
        state.iteration += 1;
    }
    Ok(state)
}
