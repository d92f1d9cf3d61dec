use std::path::Path;

use bodyaudit_core::dataset::{
    build_absent_sample, build_eval_split, dataset_stats, generate_training_records,
    ingest_annotations, mask_is_effective, DatasetStats, ManifestRecord,
};
use bodyaudit_core::{
    scenegen, Backends, Error, ImageRef, PipelineConfig, PromptTemplateSet, SceneGraph,
};

fn images(range: std::ops::Range<u64>) -> Vec<ImageRef> {
    range
        .map(|s| ImageRef::from_scene(format!("s{s}"), scenegen::generate(s)))
        .collect()
}

#[test]
fn eval_split_over_ten_scenes() {
    let (cfg, t, b) = (
        PipelineConfig::default(),
        PromptTemplateSet::default(),
        Backends::mock(),
    );
    let (manifest, samples) = build_eval_split("val", &images(0..10), &cfg, &t, &b, 7);
    assert_eq!(manifest.counts["absent"], 10);
    assert_eq!(manifest.skipped, 0);
    assert!(manifest.counts_consistent());
    for s in &samples {
        assert!(mask_is_effective(s, &cfg, &b).unwrap());
    }
    let again = build_eval_split("val", &images(0..10), &cfg, &t, &b, 7).0;
    assert_eq!(again, manifest);
    let json = serde_json::to_value(&manifest).unwrap();
    assert_eq!(json["records"][0]["type"], "absent_sample");
}

#[test]
fn empty_scene_is_skipped_not_fatal() {
    let (cfg, t, b) = (
        PipelineConfig::default(),
        PromptTemplateSet::default(),
        Backends::mock(),
    );
    let blank = ImageRef::from_scene("blank", SceneGraph::empty(64, 64));
    assert!(build_absent_sample(&blank, 0, &cfg, &t, &b)
        .unwrap()
        .is_none());
    let mut imgs = images(0..3);
    imgs.push(blank);
    let (m, _) = build_eval_split("val", &imgs, &cfg, &t, &b, 1);
    assert_eq!((m.records.len(), m.skipped), (3, 1));
}

#[test]
fn out_of_range_part_index() {
    let (cfg, t, b) = (
        PipelineConfig::default(),
        PromptTemplateSet::default(),
        Backends::mock(),
    );
    let img = ImageRef::from_scene("c", scenegen::canonical_scene(1));
    assert!(matches!(
        build_absent_sample(&img, 11, &cfg, &t, &b),
        Err(Error::Precondition(_))
    ));
    let s = build_absent_sample(&img, 3, &cfg, &t, &b).unwrap().unwrap();
    assert_eq!(s.ground_truth.part(), bodyaudit_core::BodyPart::Hand);
}

#[test]
fn training_records_round_trip() {
    let (cfg, t, b) = (
        PipelineConfig::default(),
        PromptTemplateSet::default(),
        Backends::mock(),
    );
    let imgs: Vec<ImageRef> = (0..100)
        .map(|i| ImageRef::from_scene(format!("c{i}"), scenegen::canonical_scene(1)))
        .collect();
    let (records, skipped) = generate_training_records(&imgs, &cfg, &t, &b);
    assert_eq!((records.len(), skipped), (1100, 0));
    for r in &records {
        let (part, bbox) = r.parse_target().unwrap();
        let scene = r.image.scene().unwrap();
        assert!(!scene.parts().any(|p| p.part == part && p.bbox == bbox));
        assert_eq!(r.instruction, bodyaudit_core::dataset::ABSENT_INSTRUCTION);
    }
}

#[test]
fn bundled_annotations_reproduce_the_reported_tallies() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/aigc_annotations.jsonl");
    let manifest = ingest_annotations(&path).unwrap();
    let records: Vec<_> = manifest
        .records
        .iter()
        .map(|r| match r {
            ManifestRecord::Annotation(a) => a.clone(),
            other => panic!("{other:?}"),
        })
        .collect();
    let s = dataset_stats(&records);
    assert_eq!((s.absent, s.redundant, s.no_abnormality), (649, 158, 343));
    assert_eq!(
        s,
        DatasetStats {
            absent: 649,
            redundant: 158,
            no_abnormality: 343,
            frames: 1057,
            filtered: 57
        }
    );
    assert!(manifest.counts_consistent());
}
