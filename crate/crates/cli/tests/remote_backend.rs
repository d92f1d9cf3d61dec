use std::net::SocketAddr;
use std::path::Path;

use bodyaudit_core::backends::Backends;
use bodyaudit_core::{oracle, scenegen, ImageRef, Pipeline, PipelineConfig, PromptTemplateSet};

fn spawn_worker(work_dir: &Path) -> SocketAddr {
    let app = bodyaudit_cli::worker::router(PromptTemplateSet::default(), work_dir.to_owned());
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

fn remote_pipeline(addr: SocketAddr) -> Pipeline {
    let backends = Backends::remote(&format!("http://{addr}"));
    Pipeline::new(
        PipelineConfig::default(),
        PromptTemplateSet::default(),
        backends,
    )
    .unwrap()
}

#[test]
fn remote_pipeline_agrees_with_the_in_process_mock() {
    let dir = tempfile::tempdir().unwrap();
    let addr = spawn_worker(&dir.path().join("worker"));
    let remote = remote_pipeline(addr);
    let local = Pipeline::mock();

    for seed in 0..12 {
        let scene = scenegen::generate(seed);
        let path = dir.path().join(format!("scene_{seed}.json"));
        scene.save(&path).unwrap();
        let by_path = ImageRef::open_by_path(&path).unwrap();
        let in_memory = ImageRef::open(&path).unwrap();

        let r = remote.run(&by_path).unwrap();
        let l = local.run(&in_memory).unwrap();
        assert_eq!(
            r.detection.result.findings(),
            l.detection.result.findings(),
            "seed {seed}"
        );
        assert_eq!(r.repair.plan, l.repair.plan, "seed {seed}");

        let repaired = r.repair.image.scene().unwrap();
        assert!(oracle::is_clean(&repaired), "seed {seed}");
        assert!(r.repair.image.path().is_some());
    }
}

#[test]
fn worker_reports_preconditions_as_unprocessable() {
    let dir = tempfile::tempdir().unwrap();
    let addr = spawn_worker(dir.path());
    let remote = remote_pipeline(addr);
    let missing = ImageRef::from_file("ghost", 320, 512, dir.path().join("ghost.json")).unwrap();
    let err = remote.detect(&missing).unwrap_err();
    assert!(err.to_string().contains("ghost"), "{err}");
}

#[test]
fn in_memory_images_cannot_be_sent() {
    let dir = tempfile::tempdir().unwrap();
    let remote = remote_pipeline(spawn_worker(dir.path()));
    let err = remote
        .detect(&ImageRef::from_scene("mem", scenegen::canonical_scene(1)))
        .unwrap_err();
    assert!(err.to_string().contains("no path"), "{err}");
}
