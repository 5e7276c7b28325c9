use std::process::Command;

use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

async fn echo_target(Json(body): Json<Value>) -> Json<Value> {
    // Answers `wait()` for every request, except a garbled one for step 1.
    let id = body["sample_id"].as_str().unwrap_or_default();
    let text = if id.ends_with("/1") { "I am not sure" } else { "wait()" };
    Json(json!({ "text": text }))
}

#[tokio::test(flavor = "multi_thread")]
async fn infer_then_eval() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(async move {
        axum::serve(listener, Router::new().route("/predict", post(echo_target))).await.unwrap();
    });

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap().to_string();
    let manifest = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/manifest.json");
    let status = tokio::task::spawn_blocking(move || {
        let bin = env!("CARGO_BIN_EXE_guipipe");
        let go = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
        assert!(go(&["ingest", "--manifest", manifest, "--out", &out]).status.success());
        assert!(go(&["transform", "--out", &out]).status.success());
        let o = go(&["infer", "--out", &out, "--endpoint", &url, "--max-in-flight", "3"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("91 predictions written, 0 failed"));
        go(&["eval", "--out", &out])
    })
    .await
    .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_steps"], 91);
    assert_eq!(report["unparseable"], 20);
    assert_eq!(report["missing"], 0);
}
