//! Evaluation and training data: masked absent-part samples, detector
//! training records, and ingestion of human annotations.

mod annotations;
mod samples;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use annotations::{
    dataset_stats, ingest_annotations, ingest_annotations_str, AnnotationRecord, DatasetStats,
    FilterReason, Review, ReviewStatus,
};
pub use samples::{
    build_absent_sample, build_eval_split, format_target, generate_training_records,
    mask_is_effective, parse_target, AbsentSample, TrainingLine, TrainingRecord,
    ABSENT_INSTRUCTION,
};

use crate::domain::{AbnormalityFinding, AbnormalityKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ManifestRecord {
    AbsentSample {
        source_image: String,
        masked_image: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        masked_path: Option<PathBuf>,
        ground_truth: AbnormalityFinding,
    },
    Annotation(AnnotationRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub split: String,
    pub records: Vec<ManifestRecord>,
    pub counts: BTreeMap<String, usize>,
    pub skipped: usize,
}

impl DatasetManifest {
    pub fn new(
        name: impl Into<String>,
        split: impl Into<String>,
        records: Vec<ManifestRecord>,
        skipped: usize,
    ) -> Self {
        let mut m = Self {
            name: name.into(),
            split: split.into(),
            records,
            counts: BTreeMap::new(),
            skipped,
        };
        m.counts = m.recount();
        m
    }

    /// Category counts derived from the records alone.
    pub fn recount(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        let annotations: Vec<AnnotationRecord> = self
            .records
            .iter()
            .filter_map(|r| match r {
                ManifestRecord::Annotation(a) => Some(a.clone()),
                ManifestRecord::AbsentSample { .. } => None,
            })
            .collect();
        let samples = self
            .records
            .iter()
            .filter(|r| {
                matches!(r, ManifestRecord::AbsentSample { ground_truth, .. }
                    if ground_truth.kind() == AbnormalityKind::Absent)
            })
            .count();
        if samples > 0 || annotations.is_empty() {
            counts.insert("absent".to_owned(), samples);
        }
        if !annotations.is_empty() {
            let s = dataset_stats(&annotations);
            counts.insert("absent".to_owned(), s.absent + samples);
            counts.insert("redundant".to_owned(), s.redundant);
            counts.insert("no_abnormality".to_owned(), s.no_abnormality);
            counts.insert("filtered".to_owned(), s.filtered);
            counts.insert("frames".to_owned(), s.frames);
        }
        counts
    }

    pub fn counts_consistent(&self) -> bool {
        self.counts == self.recount()
    }
}
