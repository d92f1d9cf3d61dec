use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{DatasetManifest, ManifestRecord};
use crate::domain::{AbnormalityKind, AbnormalityLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    NonRealisticStyle,
    TooLowQuality,
    AbnormalityNotObjective,
    Nsfw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    Approved,
    Rejected,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Review {
    pub round: u32,
    pub reviewer_ids: Vec<String>,
    pub status: ReviewStatus,
}

/// One human-annotated frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub frame_id: String,
    pub labels: Vec<AbnormalityLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_reason: Option<FilterReason>,
    pub review: Review,
}

impl AnnotationRecord {
    /// Returns the offending field name and reason.
    pub fn check(&self) -> Result<(), (&'static str, String)> {
        if self.frame_id.trim().is_empty() {
            return Err(("frame_id", "must be non-empty".into()));
        }
        if self.filter_reason.is_some() && !self.labels.is_empty() {
            return Err(("labels", "must be empty when filter_reason is set".into()));
        }
        if self.filter_reason.is_some() && self.review.status == ReviewStatus::Approved {
            return Err(("review", "filtered frames cannot be approved".into()));
        }
        if self.review.round < 1 {
            return Err(("review", "round must be at least 1".into()));
        }
        Ok(())
    }

    pub fn is_filtered(&self) -> bool {
        self.filter_reason.is_some()
    }
}

const FIELDS: [&str; 4] = ["frame_id", "labels", "filter_reason", "review"];

fn parse_line(line: &str, line_no: usize) -> Result<AnnotationRecord> {
    let schema = |record: String, field: &str, reason: String| Error::Schema {
        record,
        field: field.to_owned(),
        reason,
    };
    let at_line = format!("line {line_no}");
    let value: Value =
        serde_json::from_str(line).map_err(|e| schema(at_line.clone(), "<json>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| schema(at_line.clone(), "<root>", "expected a JSON object".into()))?;
    let record = obj
        .get("frame_id")
        .and_then(Value::as_str)
        .map_or_else(|| at_line.clone(), ToOwned::to_owned);
    if let Some(unknown) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
        return Err(schema(record, unknown, "unknown field".into()));
    }
    for field in FIELDS {
        let Some(v) = obj.get(field) else {
            if field == "filter_reason" {
                continue;
            }
            return Err(schema(record, field, "missing".into()));
        };
        let ok = match field {
            "frame_id" => serde_json::from_value::<String>(v.clone()).map(drop),
            "labels" => serde_json::from_value::<Vec<AbnormalityLabel>>(v.clone()).map(drop),
            "filter_reason" => serde_json::from_value::<Option<FilterReason>>(v.clone()).map(drop),
            _ => serde_json::from_value::<Review>(v.clone()).map(drop),
        };
        if let Err(e) = ok {
            return Err(schema(record, field, e.to_string()));
        }
    }
    let rec: AnnotationRecord = serde_json::from_value(value)
        .map_err(|e| schema(record.clone(), "<record>", e.to_string()))?;
    rec.check()
        .map_err(|(field, reason)| schema(record, field, reason))?;
    Ok(rec)
}

/// Parses annotation JSONL text into a manifest. Fails on the first record
/// that does not match the schema, naming its frame and field.
pub fn ingest_annotations_str(name: &str, text: &str) -> Result<DatasetManifest> {
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_line(line, i + 1)?;
        if !seen.insert(rec.frame_id.clone()) {
            return Err(Error::Schema {
                record: rec.frame_id,
                field: "frame_id".into(),
                reason: "duplicate frame".into(),
            });
        }
        records.push(ManifestRecord::Annotation(rec));
    }
    Ok(DatasetManifest::new(name, "annotations", records, 0))
}

pub fn ingest_annotations(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map_or("annotations".into(), |s| s.to_string_lossy().into_owned());
    ingest_annotations_str(&name, &text)
}

/// Frame-level tallies. A frame with both kinds counts toward both; filtered
/// frames count toward neither.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub absent: usize,
    pub redundant: usize,
    pub no_abnormality: usize,
    pub frames: usize,
    pub filtered: usize,
}

pub fn dataset_stats(records: &[AnnotationRecord]) -> DatasetStats {
    let mut s = DatasetStats::default();
    for r in records {
        s.frames += 1;
        if r.is_filtered() {
            s.filtered += 1;
            continue;
        }
        let has = |k| r.labels.iter().any(|l| l.kind == k);
        let (a, red) = (
            has(AbnormalityKind::Absent),
            has(AbnormalityKind::Redundant),
        );
        s.absent += usize::from(a);
        s.redundant += usize::from(red);
        s.no_abnormality += usize::from(!a && !red);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(extra: &str) -> String {
        format!(
            r#"{{"frame_id":"f1","labels":[{{"kind":"absent","part":"hand"}}],"review":{{"round":2,"reviewer_ids":["a","b"],"status":"approved"}}{extra}}}"#
        )
    }

    #[test]
    fn valid_line_parses() {
        let m = ingest_annotations_str("t", &line("")).unwrap();
        assert_eq!(m.records.len(), 1);
        assert_eq!(m.counts["absent"], 1);
        assert!(m.counts_consistent());
    }

    #[test]
    fn unknown_field_is_named() {
        let err = ingest_annotations_str("t", &line(r#","box":[0,0,1,1]"#)).unwrap_err();
        match err {
            Error::Schema { record, field, .. } => {
                assert_eq!((record.as_str(), field.as_str()), ("f1", "box"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_label_names_labels_field() {
        let text = line("").replace("hand", "tail");
        match ingest_annotations_str("t", &text).unwrap_err() {
            Error::Schema { record, field, .. } => {
                assert_eq!((record.as_str(), field.as_str()), ("f1", "labels"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn filtered_with_labels_rejected() {
        let text = line(r#","filter_reason":"nsfw""#).replace("approved", "rejected");
        match ingest_annotations_str("t", &text).unwrap_err() {
            Error::Schema { field, .. } => assert_eq!(field, "labels"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn frame_with_both_kinds_counts_twice() {
        let rec = |labels: Vec<AbnormalityLabel>, filter| AnnotationRecord {
            frame_id: "x".into(),
            labels,
            filter_reason: filter,
            review: Review {
                round: 1,
                reviewer_ids: vec![],
                status: ReviewStatus::Pending,
            },
        };
        use crate::domain::BodyPart::*;
        let s = dataset_stats(&[
            rec(
                vec![
                    AbnormalityLabel::absent(Hand),
                    AbnormalityLabel::redundant(Arm),
                ],
                None,
            ),
            rec(
                vec![
                    AbnormalityLabel::absent(Foot),
                    AbnormalityLabel::absent(Ear),
                ],
                None,
            ),
            rec(vec![], None),
            rec(vec![], Some(FilterReason::TooLowQuality)),
        ]);
        assert_eq!(
            s,
            DatasetStats {
                absent: 2,
                redundant: 1,
                no_abnormality: 1,
                frames: 4,
                filtered: 1
            }
        );
    }
}
