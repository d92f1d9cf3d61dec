use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use super::tally::{ConfusionTally, Counts};
use crate::domain::{AbnormalityKind, AbnormalityLabel, BodyPart};

/// Detection rate and false discovery rate, both in percent. `fdr` is `None`
/// when nothing was predicted or nothing was detected, rendered as `"--"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccFdr {
    #[serde(serialize_with = "two_decimals")]
    pub acc: f64,
    #[serde(serialize_with = "fdr_or_dashes")]
    pub fdr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CategoryScore {
    #[serde(flatten)]
    pub score: AccFdr,
    pub has_ground_truth: bool,
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn two_decimals<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round2(*v))
}

fn fdr_or_dashes<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(f) => s.serialize_f64(round2(*f)),
        None => s.serialize_str("--"),
    }
}

impl AccFdr {
    pub fn from_counts(c: Counts) -> Self {
        let acc = if c.tp + c.fn_ == 0 {
            0.0
        } else {
            100.0 * c.tp as f64 / (c.tp + c.fn_) as f64
        };
        let fdr =
            (c.tp + c.fp > 0 && acc > 0.0).then(|| 100.0 * c.fp as f64 / (c.fp + c.tp) as f64);
        Self { acc, fdr }
    }

    /// `"50.00"` / `"--"` strings as printed in tables.
    pub fn rendered(&self) -> (String, String) {
        (
            format!("{:.2}", self.acc),
            self.fdr.map_or("--".into(), |f| format!("{f:.2}")),
        )
    }
}

/// Per-label scores plus micro and macro averages per kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub per_label: BTreeMap<AbnormalityLabel, CategoryScore>,
    pub micro: BTreeMap<AbnormalityKind, AccFdr>,
    pub macro_: BTreeMap<AbnormalityKind, AccFdr>,
}

pub fn acc_fdr(t: &ConfusionTally) -> ScoreTable {
    let per_label = t
        .iter()
        .map(|(l, c)| {
            (
                l,
                CategoryScore {
                    score: AccFdr::from_counts(c),
                    has_ground_truth: c.tp + c.fn_ > 0,
                },
            )
        })
        .collect::<BTreeMap<_, _>>();
    let mut micro = BTreeMap::new();
    let mut macro_ = BTreeMap::new();
    for kind in AbnormalityKind::ALL {
        let labels = BodyPart::ALL.map(|p| AbnormalityLabel::new(kind, p));
        let mut sum = Counts::default();
        for l in labels {
            sum += t.get(l);
        }
        micro.insert(kind, AccFdr::from_counts(sum));

        let scored: Vec<&CategoryScore> = labels
            .iter()
            .map(|l| &per_label[l])
            .filter(|s| s.has_ground_truth)
            .collect();
        let acc = if scored.is_empty() {
            0.0
        } else {
            scored.iter().map(|s| s.score.acc).sum::<f64>() / scored.len() as f64
        };
        let fdrs: Vec<f64> = labels
            .iter()
            .filter_map(|l| per_label[l].score.fdr)
            .collect();
        let fdr =
            (!fdrs.is_empty() && acc > 0.0).then(|| fdrs.iter().sum::<f64>() / fdrs.len() as f64);
        macro_.insert(kind, AccFdr { acc, fdr });
    }
    ScoreTable {
        per_label,
        micro,
        macro_,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(tp: u64, fp: u64, fn_: u64) -> Counts {
        Counts { tp, fp, fn_ }
    }

    #[test]
    fn fixtures() {
        assert_eq!(
            AccFdr::from_counts(c(2, 1, 2)).rendered(),
            ("50.00".into(), "33.33".into())
        );
        assert_eq!(
            AccFdr::from_counts(c(0, 0, 5)).rendered(),
            ("0.00".into(), "--".into())
        );
        assert_eq!(
            AccFdr::from_counts(c(3, 0, 0)).rendered(),
            ("100.00".into(), "0.00".into())
        );
        assert_eq!(AccFdr::from_counts(c(0, 4, 5)).fdr, None);
    }

    #[test]
    fn serializes_dashes() {
        let v = serde_json::to_value(AccFdr::from_counts(c(0, 0, 5))).unwrap();
        assert_eq!(v, serde_json::json!({"acc": 0.0, "fdr": "--"}));
    }

    #[test]
    fn micro_and_macro_differ_by_weighting() {
        let mut t = ConfusionTally::default();
        t.set(AbnormalityLabel::absent(BodyPart::Hand), c(9, 0, 1));
        t.set(AbnormalityLabel::absent(BodyPart::Foot), c(0, 0, 10));
        let s = acc_fdr(&t);
        assert_eq!(s.micro[&AbnormalityKind::Absent].acc, 45.0);
        assert_eq!(s.macro_[&AbnormalityKind::Absent].acc, 45.0);
        t.set(AbnormalityLabel::absent(BodyPart::Foot), c(0, 0, 1));
        let s = acc_fdr(&t);
        assert!((s.micro[&AbnormalityKind::Absent].acc - 900.0 / 11.0).abs() < 1e-9);
        assert_eq!(s.macro_[&AbnormalityKind::Absent].acc, 45.0);
        assert!(!s.per_label[&AbnormalityLabel::redundant(BodyPart::Hand)].has_ground_truth);
    }

    proptest! {
        #[test]
        fn scale_free(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, k in 1u64..20) {
            let a = AccFdr::from_counts(c(tp, fp, fn_));
            let b = AccFdr::from_counts(c(tp, fp, fn_).scaled(k));
            prop_assert!((a.acc - b.acc).abs() < 1e-9);
            match (a.fdr, b.fdr) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false),
            }
        }
    }
}
