use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use bodyaudit_cli::serve::router;
use bodyaudit_core::annotation::TaskStore;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(frames: &[&str]) -> Router {
    let frames: Vec<(&str, Option<&str>)> = frames.iter().map(|f| (*f, None)).collect();
    router(TaskStore::in_memory(&frames, 2))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_owned())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn json_call(app: &Router, method: &str, uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, text) = call(app, method, uri, Some(&body.to_string())).await;
    (s, serde_json::from_str(&text).unwrap_or(Value::Null))
}

fn review(reviewer: &str, verdict: &str) -> Value {
    json!({ "reviewer": reviewer, "verdict": verdict })
}

#[tokio::test]
async fn label_then_two_approvals_reaches_export() {
    let app = app(&["f1", "f2"]);
    let labels = json!({ "labels": [{ "kind": "absent", "part": "hand" }] });
    let (s, t) = json_call(&app, "POST", "/tasks/t00001/label", labels).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(t["state"], "labeled");

    let (s, t) = json_call(
        &app,
        "POST",
        "/tasks/t00001/review",
        review("r1", "approve"),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(t["state"], "in_review");
    assert_eq!(t["round"], 1);

    let (s, t) = json_call(
        &app,
        "POST",
        "/tasks/t00001/review",
        review("r2", "approve"),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(t["state"], "approved");

    let (s, body) = call(&app, "GET", "/export", None).await;
    assert_eq!(s, StatusCode::OK);
    let lines: Vec<Value> = body
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["frame_id"], "f1");
    assert_eq!(lines[0]["labels"][0]["part"], "hand");
    assert_eq!(lines[0]["review"]["status"], "approved");
}

#[tokio::test]
async fn same_reviewer_cannot_approve_twice() {
    let app = app(&["f1"]);
    json_call(&app, "POST", "/tasks/t00001/label", json!({ "labels": [] })).await;
    json_call(
        &app,
        "POST",
        "/tasks/t00001/review",
        review("r1", "approve"),
    )
    .await;
    let (s, _) = json_call(
        &app,
        "POST",
        "/tasks/t00001/review",
        review("r1", "approve"),
    )
    .await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (_, t) = json_call(&app, "GET", "/tasks/t00001", Value::Null).await;
    assert_eq!(t["state"], "in_review");
}

#[tokio::test]
async fn rejection_sends_the_task_back_to_labeling() {
    let app = app(&["f1"]);
    json_call(&app, "POST", "/tasks/t00001/label", json!({ "labels": [] })).await;
    json_call(
        &app,
        "POST",
        "/tasks/t00001/review",
        review("r1", "approve"),
    )
    .await;
    let (s, t) = json_call(&app, "POST", "/tasks/t00001/review", review("r2", "reject")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(t["state"], "labeled");
    assert_eq!(t["approvals"], json!([]));
}

#[tokio::test]
async fn filtered_tasks_are_not_exported() {
    let app = app(&["f1"]);
    let body = json!({ "labels": [], "filter_reason": "nsfw" });
    let (s, t) = json_call(&app, "POST", "/tasks/t00001/label", body).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(t["state"], "filtered");
    let (_, exported) = call(&app, "GET", "/export", None).await;
    assert!(exported.trim().is_empty());
    let (s, _) = json_call(
        &app,
        "POST",
        "/tasks/t00001/review",
        review("r1", "approve"),
    )
    .await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn reviewing_an_unlabeled_task_conflicts() {
    let app = app(&["f1"]);
    let (s, body) = json_call(
        &app,
        "POST",
        "/tasks/t00001/review",
        review("r1", "approve"),
    )
    .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert!(body["error"].is_string());
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let app = app(&["f1"]);
    assert_eq!(
        call(&app, "GET", "/tasks/t99999", None).await.0,
        StatusCode::NOT_FOUND
    );
    let (s, _) = json_call(&app, "POST", "/tasks/nope/label", json!({ "labels": [] })).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(
        call(&app, "GET", "/repairs/x", None).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn malformed_bodies_are_rejected() {
    let app = app(&["f1"]);
    for body in [
        "{",
        r#"{"labels": [{"kind": "twisted", "part": "hand"}]}"#,
        r#"{"labels": [], "extra": 1}"#,
        r#"{"labels": [], "filter_reason": "blurry"}"#,
    ] {
        let (s, _) = call(&app, "POST", "/tasks/t00001/label", Some(body)).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    }
    json_call(&app, "POST", "/tasks/t00001/label", json!({ "labels": [] })).await;
    let (s, _) = call(
        &app,
        "POST",
        "/tasks/t00001/review",
        Some(r#"{"reviewer":"r1","verdict":"maybe"}"#),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(
        call(&app, "GET", "/tasks/next", None).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
}

#[tokio::test]
async fn next_hands_out_distinct_tasks_until_none_remain() {
    let app = app(&["f1", "f2"]);
    let (s, a) = call(&app, "GET", "/tasks/next?reviewer=r1", None).await;
    assert_eq!(s, StatusCode::OK);
    let (_, b) = call(&app, "GET", "/tasks/next?reviewer=r2", None).await;
    let a: Value = serde_json::from_str(&a).unwrap();
    let b: Value = serde_json::from_str(&b).unwrap();
    assert_ne!(a["task_id"], b["task_id"]);
    assert_eq!(
        call(&app, "GET", "/tasks/next?reviewer=r3", None).await.0,
        StatusCode::NO_CONTENT
    );
}

#[tokio::test]
async fn listing_filters_by_state() {
    let app = app(&["f1", "f2", "f3"]);
    json_call(&app, "POST", "/tasks/t00002/label", json!({ "labels": [] })).await;
    let (_, v) = json_call(&app, "GET", "/tasks?state=labeled", Value::Null).await;
    assert_eq!(v["tasks"].as_array().unwrap().len(), 1);
    let (_, v) = json_call(&app, "GET", "/tasks", Value::Null).await;
    assert_eq!(v["tasks"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn store_persists_across_restarts_and_serves_repairs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("frames.jsonl"),
        "{\"frame_id\":\"a\"}\n{\"frame_id\":\"b\",\"image\":\"b.png\"}\n",
    )
    .unwrap();
    let repairs = json!([{ "repair_id": "p1", "original": "a.png", "repaired": "a.fixed.png" }]);
    std::fs::write(dir.path().join("repairs.json"), repairs.to_string()).unwrap();

    let app = router(TaskStore::open(dir.path(), 1).unwrap());
    json_call(
        &app,
        "POST",
        "/tasks/t00002/label",
        json!({ "labels": [{ "kind": "redundant", "part": "leg" }] }),
    )
    .await;
    let (s, v) = json_call(&app, "POST", "/repairs/p1/verdict", review("r1", "approve")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["verdicts"][0]["verdict"], "approve");

    let app = router(TaskStore::open(dir.path(), 1).unwrap());
    let (_, t) = json_call(&app, "GET", "/tasks/t00002", Value::Null).await;
    assert_eq!(t["state"], "labeled");
    assert_eq!(t["image"], "b.png");
    let (_, r) = json_call(&app, "GET", "/repairs/p1", Value::Null).await;
    assert_eq!(r["verdicts"].as_array().unwrap().len(), 1);
}
