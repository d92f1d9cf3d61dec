//! Regenerate-and-compare detection of supernumerary parts.
//!
//! Each grounded part is inpainted in place with a prompt asking for its
//! own class. A part that belongs to the body comes back; a surplus one is
//! replaced by background. The verdict is whether the class re-grounds
//! inside the original box with a score of at least the grounding
//! threshold.

use serde::{Deserialize, Serialize};

use crate::backends::Backends;
use crate::domain::{
    AbnormalityFinding, BBox, BodyPart, ImageRef, PartDetection, PipelineConfig, PromptFamily,
    PromptTemplateSet,
};
use crate::error::{Error, Result};

/// The evidence behind one redundancy verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyProbe {
    pub candidate: PartDetection,
    pub regenerated: ImageRef,
    pub reground_score: f64,
    pub verdict: bool,
}

impl RedundancyProbe {
    pub fn log_line(&self) -> ProbeLogLine {
        ProbeLogLine {
            part: self.candidate.part,
            bbox: self.candidate.bbox,
            reground_score: self.reground_score,
            verdict: self.verdict,
        }
    }
}

/// One line of the probe audit log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeLogLine {
    pub part: BodyPart,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub reground_score: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RedundancyOutcome {
    pub findings: Vec<AbnormalityFinding>,
    pub probes: Vec<RedundancyProbe>,
}

pub fn detect_redundant(
    image: &ImageRef,
    config: &PipelineConfig,
    templates: &PromptTemplateSet,
    backends: &Backends,
) -> Result<RedundancyOutcome> {
    let candidates = backends
        .grounder
        .ground(image, &BodyPart::ALL, config.grounding_threshold)
        .map_err(|e| Error::backend("redundant stage: grounding", e))?;

    let mut outcome = RedundancyOutcome::default();
    for candidate in candidates {
        // every probe starts from the original image
        let probe = run_probe(image, candidate, config, templates, backends)?;
        if probe.verdict {
            outcome.findings.push(AbnormalityFinding::redundant(
                candidate.part,
                candidate.bbox,
            ));
        }
        outcome.probes.push(probe);
    }
    Ok(outcome)
}

fn run_probe(
    image: &ImageRef,
    candidate: PartDetection,
    config: &PipelineConfig,
    templates: &PromptTemplateSet,
    backends: &Backends,
) -> Result<RedundancyProbe> {
    let at = || {
        format!(
            "redundant stage: probe of {} at {}",
            candidate.part, candidate.bbox
        )
    };
    let prompt = templates.render_family(PromptFamily::Regeneration, candidate.part);
    let regenerated = backends
        .inpainter
        .inpaint(image, candidate.bbox, &prompt)
        .map_err(|e| Error::backend(at(), e))?;
    let regrounded = backends
        .grounder
        .ground(&regenerated, &[candidate.part], 0.0)
        .map_err(|e| Error::backend(at(), e))?;
    let reground_score = regrounded
        .iter()
        .filter(|d| d.part == candidate.part && d.bbox.iou(&candidate.bbox) >= config.match_iou)
        .map(|d| d.score)
        .fold(0.0, f64::max);
    Ok(RedundancyProbe {
        candidate,
        regenerated,
        reground_score,
        verdict: reground_score < config.grounding_threshold,
    })
}

/// Re-derives findings from recorded probes under a different threshold.
pub fn replay_verdicts(probes: &[ProbeLogLine], threshold: f64) -> Vec<AbnormalityFinding> {
    probes
        .iter()
        .filter(|p| p.reground_score < threshold)
        .map(|p| AbnormalityFinding::redundant(p.part, p.bbox))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{PartNode, PersonNode, SceneGraph};
    use crate::domain::AbnormalityKind;

    fn b(x0: u32, y0: u32, x1: u32, y1: u32) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn node(part: BodyPart, bbox: BBox) -> PartNode {
        PartNode {
            part,
            bbox,
            occluded: false,
        }
    }

    fn canonical_person() -> PersonNode {
        PersonNode {
            person_id: "p".into(),
            body_box: b(0, 0, 300, 400),
            parts: vec![
                node(BodyPart::Head, b(130, 10, 170, 50)),
                node(BodyPart::Ear, b(100, 20, 120, 40)),
                node(BodyPart::Ear, b(180, 20, 200, 40)),
                node(BodyPart::Arm, b(40, 80, 80, 160)),
                node(BodyPart::Arm, b(220, 80, 260, 160)),
                node(BodyPart::Hand, b(40, 180, 80, 220)),
                node(BodyPart::Hand, b(220, 180, 260, 220)),
                node(BodyPart::Leg, b(100, 240, 140, 320)),
                node(BodyPart::Leg, b(160, 240, 200, 320)),
                node(BodyPart::Foot, b(100, 340, 140, 380)),
                node(BodyPart::Foot, b(160, 340, 200, 380)),
            ],
            absent_slots: vec![],
        }
    }

    fn run(scene: SceneGraph) -> RedundancyOutcome {
        detect_redundant(
            &ImageRef::from_scene("img", scene),
            &PipelineConfig::default(),
            &PromptTemplateSet::default(),
            &Backends::mock(),
        )
        .unwrap()
    }

    #[test]
    fn surplus_hand_is_the_only_finding() {
        let mut scene = SceneGraph::empty(300, 400);
        let mut p = canonical_person();
        p.parts.push(node(BodyPart::Hand, b(130, 180, 170, 220)));
        scene.persons.push(p);
        let out = run(scene);
        assert_eq!(
            out.findings,
            vec![AbnormalityFinding::redundant(
                BodyPart::Hand,
                b(130, 180, 170, 220)
            )]
        );
        assert_eq!(out.probes.len(), 12);
        assert_eq!(out.probes.iter().filter(|p| p.verdict).count(), 1);
    }

    #[test]
    fn canonical_person_has_no_findings() {
        let mut scene = SceneGraph::empty(300, 400);
        scene.persons.push(canonical_person());
        let out = run(scene);
        assert!(out.findings.is_empty());
        assert!(out
            .probes
            .iter()
            .all(|p| !p.verdict && p.reground_score == 1.0));
    }

    #[test]
    fn floating_arm_is_redundant() {
        let mut scene = SceneGraph::empty(500, 400);
        scene.persons.push(canonical_person());
        scene
            .floating_parts
            .push(node(BodyPart::Arm, b(400, 100, 440, 180)));
        let out = run(scene);
        assert_eq!(out.findings.len(), 1);
        assert_eq!(out.findings[0].label().kind, AbnormalityKind::Redundant);
        assert_eq!(out.findings[0].part(), BodyPart::Arm);
        assert_eq!(out.findings[0].bbox(), b(400, 100, 440, 180));
    }

    #[test]
    fn replay_is_monotone_in_threshold() {
        let lines: Vec<ProbeLogLine> = [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .enumerate()
            .map(|(i, &s)| ProbeLogLine {
                part: BodyPart::Hand,
                bbox: b(i as u32 * 10, 0, i as u32 * 10 + 5, 5),
                reground_score: s,
                verdict: s < 0.35,
            })
            .collect();
        assert_eq!(replay_verdicts(&lines, 0.35).len(), 2);
        assert_eq!(replay_verdicts(&lines, 0.6).len(), 3);
        assert_eq!(replay_verdicts(&lines, 0.05).len(), 0);
        let json = serde_json::to_string(&lines[0]).unwrap();
        assert_eq!(
            json,
            r#"{"part":"hand","box":[0,0,5,5],"reground_score":0.1,"verdict":true}"#
        );
    }
}
