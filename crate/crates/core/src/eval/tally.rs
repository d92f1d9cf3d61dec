use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{AbnormalityKind, AbnormalityLabel, BBox, BodyPart};
use crate::error::{Error, Result};

/// A label with an optional box; boxes are only needed for box-level scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalLabel {
    pub kind: AbnormalityKind,
    pub part: BodyPart,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
}

impl EvalLabel {
    pub fn flag(label: AbnormalityLabel) -> Self {
        Self {
            kind: label.kind,
            part: label.part,
            bbox: None,
        }
    }

    pub fn boxed(label: AbnormalityLabel, bbox: BBox) -> Self {
        Self {
            kind: label.kind,
            part: label.part,
            bbox: Some(bbox),
        }
    }

    pub fn label(&self) -> AbnormalityLabel {
        AbnormalityLabel::new(self.kind, self.part)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRecord {
    pub frame_id: String,
    pub ground_truth: Vec<EvalLabel>,
    pub predictions: Vec<EvalLabel>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn scaled(self, k: u64) -> Self {
        Self {
            tp: self.tp * k,
            fp: self.fp * k,
            fn_: self.fn_ * k,
        }
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

/// TP/FP/FN for each of the twelve labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionTally {
    counts: BTreeMap<AbnormalityLabel, Counts>,
}

impl Default for ConfusionTally {
    fn default() -> Self {
        Self {
            counts: AbnormalityLabel::all()
                .map(|l| (l, Counts::default()))
                .collect(),
        }
    }
}

impl ConfusionTally {
    pub fn get(&self, label: AbnormalityLabel) -> Counts {
        self.counts[&label]
    }

    pub fn set(&mut self, label: AbnormalityLabel, counts: Counts) {
        self.counts.insert(label, counts);
    }

    pub fn iter(&self) -> impl Iterator<Item = (AbnormalityLabel, Counts)> + '_ {
        self.counts.iter().map(|(l, c)| (*l, *c))
    }

    pub fn scaled(&self, k: u64) -> Self {
        Self {
            counts: self.counts.iter().map(|(l, c)| (*l, c.scaled(k))).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TallyMode {
    FlagLevel,
    BoxLevel,
}

/// Greedy one-to-one matching by descending IoU; returns the match count.
fn match_boxes(gt: &[BBox], pred: &[BBox], iou_threshold: f64) -> u64 {
    let mut pairs: Vec<(f64, usize, usize)> = gt
        .iter()
        .enumerate()
        .flat_map(|(i, g)| pred.iter().enumerate().map(move |(j, p)| (g.iou(p), i, j)))
        .filter(|(iou, ..)| *iou >= iou_threshold)
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let (mut used_g, mut used_p) = (vec![false; gt.len()], vec![false; pred.len()]);
    let mut matched = 0;
    for (_, i, j) in pairs {
        if !used_g[i] && !used_p[j] {
            used_g[i] = true;
            used_p[j] = true;
            matched += 1;
        }
    }
    matched
}

pub fn tally(
    records: &[EvalRecord],
    mode: TallyMode,
    iou_threshold: f64,
) -> Result<ConfusionTally> {
    let mut out = ConfusionTally::default();
    for rec in records {
        for label in AbnormalityLabel::all() {
            let pick = |v: &[EvalLabel]| {
                v.iter()
                    .filter(|l| l.label() == label)
                    .copied()
                    .collect::<Vec<_>>()
            };
            let (gt, pred) = (pick(&rec.ground_truth), pick(&rec.predictions));
            if gt.is_empty() && pred.is_empty() {
                continue;
            }
            let (g, p) = (gt.len() as u64, pred.len() as u64);
            let tp = match mode {
                TallyMode::FlagLevel => g.min(p),
                TallyMode::BoxLevel => {
                    let boxes = |v: &[EvalLabel], side: &str| {
                        v.iter()
                            .map(|l| {
                                l.bbox.ok_or_else(|| {
                                    Error::Precondition(format!(
                                        "box-level scoring needs boxes: frame `{}` has a {side} `{label}` without one",
                                        rec.frame_id
                                    ))
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    };
                    match_boxes(
                        &boxes(&gt, "ground-truth")?,
                        &boxes(&pred, "predicted")?,
                        iou_threshold,
                    )
                }
            };
            let mut c = out.get(label);
            c += Counts {
                tp,
                fp: p - tp,
                fn_: g - tp,
            };
            out.set(label, c);
        }
    }
    Ok(out)
}
