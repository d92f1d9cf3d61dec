use bodyaudit_core::oracle;
use bodyaudit_core::redundant::replay_verdicts;
use bodyaudit_core::{scenegen, AbnormalityLabel, BBox, ImageRef, Pipeline};

fn findings(p: &Pipeline, image: &ImageRef) -> Vec<(AbnormalityLabel, BBox)> {
    let d = p.detect(image).unwrap();
    let mut got: Vec<_> = d
        .result
        .findings()
        .iter()
        .map(|f| (f.label(), f.bbox()))
        .collect();
    got.sort();
    got
}

#[test]
fn findings_match_the_oracle_on_random_scenes() {
    let p = Pipeline::mock();
    for seed in 0..200 {
        let scene = scenegen::generate(seed);
        let want = oracle::abnormalities(&scene);
        let got = findings(&p, &ImageRef::from_scene(format!("s{seed}"), scene));
        assert_eq!(got, want, "seed {seed}");
    }
}

#[test]
fn repairs_are_complete_local_and_idempotent() {
    let p = Pipeline::mock();
    for seed in 0..200 {
        let scene = scenegen::generate(seed);
        let image = ImageRef::from_scene(format!("s{seed}"), scene.clone());
        let run = p.run(&image).unwrap();
        let repaired = run.repair.image.scene().unwrap();
        assert!(
            oracle::is_clean(&repaired),
            "seed {seed}: {:?}",
            oracle::abnormalities(&repaired)
        );

        let regions: Vec<BBox> = run
            .repair
            .report
            .steps
            .iter()
            .map(|s| s.expanded_box)
            .collect();
        let broken = oracle::locality_violations(&scene, &repaired, &regions);
        assert!(broken.is_empty(), "seed {seed}: {broken:?}");

        let again = p
            .run(&run.repair.image.with_id(format!("s{seed}-again")))
            .unwrap();
        assert!(
            again.repair.plan.is_empty(),
            "seed {seed}: {:?}",
            again.repair.plan
        );
    }
}

#[test]
fn accepted_absent_findings_match_the_oracle_deficit() {
    let p = Pipeline::mock();
    for seed in 0..200 {
        let scene = scenegen::generate(seed);
        let d = p.detect(&ImageRef::from_scene("s", scene.clone())).unwrap();
        if d.absent_loop.discarded.is_empty() {
            assert_eq!(
                d.absent_loop.accepted.len(),
                oracle::absent_deficit(&scene),
                "seed {seed}"
            );
        }
        let iters: Vec<u32> = d
            .absent_loop
            .accepted
            .iter()
            .map(|f| f.iteration())
            .collect();
        assert!(iters.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn raising_the_threshold_never_shrinks_the_redundant_set() {
    let p = Pipeline::mock();
    for seed in 1000..1050 {
        let d = p
            .detect(&ImageRef::from_scene("s", scenegen::generate(seed)))
            .unwrap();
        let log: Vec<_> = d.probes.iter().map(|pr| pr.log_line()).collect();
        let mut prev = 0;
        for tau in [0.0, 0.1, 0.35, 0.5, 0.9, 1.0, 1.01] {
            let n = replay_verdicts(&log, tau).len();
            assert!(n >= prev, "seed {seed}, tau {tau}");
            prev = n;
        }
        assert_eq!(
            replay_verdicts(&log, p.config().grounding_threshold).len(),
            d.result.redundant().count()
        );
    }
}

#[test]
fn superresolution_upscales_the_repair() {
    let config = bodyaudit_core::PipelineConfig {
        enable_superresolution: true,
        ..Default::default()
    };
    let p = Pipeline::new(config, Default::default(), bodyaudit_core::Backends::mock()).unwrap();
    let image = ImageRef::from_scene("s", scenegen::generate(7));
    let out = p.run(&image).unwrap();
    assert_eq!(out.repair.image.width(), image.width() * 2);
    assert!(out.repair.report.superresolution);
    assert!(oracle::is_clean(&out.repair.image.scene().unwrap()));
}

#[test]
fn video_repair_fixes_both_endpoints() {
    let p = Pipeline::mock();
    let first = ImageRef::from_scene("first", scenegen::generate(3));
    let last = ImageRef::from_scene("last", scenegen::generate(3));
    let frames = p.repair_video(&first, &last, "a person waving", 6).unwrap();
    assert_eq!(frames.len(), 6);
    for f in [&frames[0], &frames[5]] {
        assert!(oracle::is_clean(&f.scene().unwrap()));
    }
}
