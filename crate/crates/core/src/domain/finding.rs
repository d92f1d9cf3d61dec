use serde::{Deserialize, Serialize};

use super::{AbnormalityKind, AbnormalityLabel, BBox, BodyPart, ImageRef};

/// A grounded body part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartDetection {
    pub part: BodyPart,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub score: f64,
}

impl PartDetection {
    pub fn new(part: BodyPart, bbox: BBox, score: f64) -> Self {
        Self {
            part,
            bbox,
            score: score.clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    RedundantStage,
    AbsentStage,
}

/// A located abnormality together with the stage (and absent-loop iteration)
/// that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FindingWire", into = "FindingWire")]
pub struct AbnormalityFinding {
    label: AbnormalityLabel,
    bbox: BBox,
    stage: Stage,
    iteration: u32,
}

impl AbnormalityFinding {
    pub fn redundant(part: BodyPart, bbox: BBox) -> Self {
        Self {
            label: AbnormalityLabel::redundant(part),
            bbox,
            stage: Stage::RedundantStage,
            iteration: 0,
        }
    }

    pub fn absent(part: BodyPart, bbox: BBox, iteration: u32) -> Self {
        Self {
            label: AbnormalityLabel::absent(part),
            bbox,
            stage: Stage::AbsentStage,
            iteration,
        }
    }

    pub fn label(&self) -> AbnormalityLabel {
        self.label
    }
    pub fn kind(&self) -> AbnormalityKind {
        self.label.kind
    }
    pub fn part(&self) -> BodyPart {
        self.label.part
    }
    pub fn bbox(&self) -> BBox {
        self.bbox
    }
    pub fn stage(&self) -> Stage {
        self.stage
    }
    pub fn iteration(&self) -> u32 {
        self.iteration
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FindingWire {
    kind: AbnormalityKind,
    part: BodyPart,
    #[serde(rename = "box")]
    bbox: BBox,
    stage: Stage,
    iteration: u32,
}

impl TryFrom<FindingWire> for AbnormalityFinding {
    type Error = String;

    fn try_from(w: FindingWire) -> Result<Self, Self::Error> {
        match (w.stage, w.kind) {
            (Stage::RedundantStage, AbnormalityKind::Redundant) if w.iteration == 0 => {
                Ok(Self::redundant(w.part, w.bbox))
            }
            (Stage::AbsentStage, AbnormalityKind::Absent) => {
                Ok(Self::absent(w.part, w.bbox, w.iteration))
            }
            _ => Err(format!(
                "finding kind `{}` inconsistent with stage {:?} / iteration {}",
                w.kind, w.stage, w.iteration
            )),
        }
    }
}

impl From<AbnormalityFinding> for FindingWire {
    fn from(f: AbnormalityFinding) -> Self {
        Self {
            kind: f.label.kind,
            part: f.label.part,
            bbox: f.bbox,
            stage: f.stage,
            iteration: f.iteration,
        }
    }
}

/// Output of the detection stages for one image. Redundant findings always
/// precede absent findings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DetectionResultWire")]
pub struct DetectionResult {
    image_id: String,
    findings: Vec<AbnormalityFinding>,
    working_image: ImageRef,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionResultWire {
    image_id: String,
    findings: Vec<AbnormalityFinding>,
    working_image: ImageRef,
}

impl TryFrom<DetectionResultWire> for DetectionResult {
    type Error = String;

    fn try_from(w: DetectionResultWire) -> Result<Self, Self::Error> {
        let (redundant, absent): (Vec<_>, Vec<_>) = w
            .findings
            .into_iter()
            .partition(|f| f.kind() == AbnormalityKind::Redundant);
        Ok(DetectionResult::new(
            w.image_id,
            redundant,
            absent,
            w.working_image,
        ))
    }
}

impl DetectionResult {
    pub fn new(
        image_id: impl Into<String>,
        redundant: Vec<AbnormalityFinding>,
        absent: Vec<AbnormalityFinding>,
        working_image: ImageRef,
    ) -> Self {
        debug_assert!(redundant
            .iter()
            .all(|f| f.kind() == AbnormalityKind::Redundant));
        debug_assert!(absent.iter().all(|f| f.kind() == AbnormalityKind::Absent));
        let mut findings = redundant;
        findings.extend(absent);
        Self {
            image_id: image_id.into(),
            findings,
            working_image,
        }
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn findings(&self) -> &[AbnormalityFinding] {
        &self.findings
    }

    pub fn working_image(&self) -> &ImageRef {
        &self.working_image
    }

    pub fn redundant(&self) -> impl Iterator<Item = &AbnormalityFinding> {
        self.findings
            .iter()
            .filter(|f| f.kind() == AbnormalityKind::Redundant)
    }

    pub fn absent(&self) -> impl Iterator<Item = &AbnormalityFinding> {
        self.findings
            .iter()
            .filter(|f| f.kind() == AbnormalityKind::Absent)
    }

    /// True when every redundant finding comes before every absent one.
    pub fn is_ordered(&self) -> bool {
        self.findings.windows(2).all(|w| {
            !(w[0].kind() == AbnormalityKind::Absent && w[1].kind() == AbnormalityKind::Redundant)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx() -> BBox {
        BBox::new(1, 2, 11, 12).unwrap()
    }

    #[test]
    fn finding_json_shape() {
        let f = AbnormalityFinding::absent(BodyPart::Foot, bx(), 3);
        let v = serde_json::to_value(f).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"kind":"absent","part":"foot","box":[1,2,11,12],"stage":"absent_stage","iteration":3})
        );
        assert_eq!(serde_json::from_value::<AbnormalityFinding>(v).unwrap(), f);
    }

    #[test]
    fn stage_kind_mismatch_rejected() {
        let bad = serde_json::json!({"kind":"absent","part":"foot","box":[1,2,11,12],"stage":"redundant_stage","iteration":0});
        assert!(serde_json::from_value::<AbnormalityFinding>(bad).is_err());
        let bad = serde_json::json!({"kind":"redundant","part":"foot","box":[1,2,11,12],"stage":"redundant_stage","iteration":2});
        assert!(serde_json::from_value::<AbnormalityFinding>(bad).is_err());
    }

    #[test]
    fn result_orders_redundant_first() {
        let img = ImageRef::from_file("x", 20, 20, "x.png").unwrap();
        let r = DetectionResult::new(
            "x",
            vec![AbnormalityFinding::redundant(BodyPart::Arm, bx())],
            vec![AbnormalityFinding::absent(BodyPart::Hand, bx(), 0)],
            img.clone(),
        );
        assert!(r.is_ordered());
        let json = serde_json::to_string(&r).unwrap();
        let back: DetectionResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back.findings(), r.findings());

        // out-of-order input is normalized on load
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["findings"].as_array_mut().unwrap().reverse();
        let back: DetectionResult = serde_json::from_value(v).unwrap();
        assert!(back.is_ordered());
    }
}
