// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pkcurve_cli::service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(snapshots: Option<std::path::PathBuf>) -> Router {
    router(Arc::new(AppState::new(snapshots)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn create(app: &Router, continuity: &str) -> u64 {
    let (status, body) = call(app, "POST", "/doc", Some(json!({ "continuity": continuity }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body["id"].as_u64().unwrap()
}

const POINTS: [[f64; 2]; 6] = [[0.0, 0.0], [1.0, 0.8], [2.0, 0.4], [3.0, 1.1], [4.0, 0.2], [5.0, 0.9]];

async fn filled(app: &Router, continuity: &str) -> u64 {
    let id = create(app, continuity).await;
    for p in POINTS {
        let (status, body) = call(app, "POST", &format!("/doc/{id}/point"), Some(json!(p))).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
    id
}

#[tokio::test]
async fn insertion_deltas_are_local() {
    let app = app(None);
    let id = create(&app, "G2").await;
    for (i, p) in POINTS.iter().enumerate() {
        let (status, delta) = call(&app, "POST", &format!("/doc/{id}/point"), Some(json!(p))).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(delta["revision"], json!(i + 1));
        assert_eq!(delta["point_count"], json!(i + 1));
        let changed = delta["changed_segment_indices"].as_array().unwrap();
        assert!(changed.len() <= 3, "{changed:?}");
        assert_eq!(delta["segments"].as_array().unwrap().len(), changed.len());
        let count = delta["segment_count"].as_u64().unwrap() as usize;
        assert_eq!(count, (i + 1).saturating_sub(2));
        for c in changed {
            assert!(c.as_u64().unwrap() as usize + 3 >= count);
        }
    }
    let (status, file) = call(&app, "GET", &format!("/doc/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(file["continuity"], json!("G2"));
    assert_eq!(file["segments"].as_array().unwrap().len(), POINTS.len() - 2);
}

#[tokio::test]
async fn undo_restores_the_previous_file_exactly() {
    let app = app(None);
    let id = filled(&app, "C2").await;
    let (_, before) = call(&app, "GET", &format!("/doc/{id}"), None).await;
    let (status, _) = call(&app, "POST", &format!("/doc/{id}/move"), Some(json!({ "index": 2, "point": [2.1, 0.5] }))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, moved) = call(&app, "GET", &format!("/doc/{id}"), None).await;
    assert_ne!(moved, before);
    let (status, delta) = call(&app, "POST", &format!("/doc/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(delta["report"]["edit"].is_null());
    let (_, after) = call(&app, "GET", &format!("/doc/{id}"), None).await;
    assert_eq!(after, before);
    let (status, _) = call(&app, "POST", &format!("/doc/{id}/redo"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, again) = call(&app, "GET", &format!("/doc/{id}"), None).await;
    assert_eq!(again, moved);
    let (status, _) = call(&app, "POST", &format!("/doc/{id}/redo"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn close_and_comb() {
    let app = app(None);
    let id = filled(&app, "G1").await;
    let (status, delta) = call(&app, "POST", &format!("/doc/{id}/close"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(delta["closed"], json!(true));
    assert_eq!(delta["segment_count"], json!(POINTS.len()));
    let (status, comb) = call(&app, "GET", &format!("/doc/{id}/comb?scale=0.2&samples=8"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(comb["tip_points"].as_array().unwrap().len(), 8 * POINTS.len());
    let (status, _) = call(&app, "GET", &format!("/doc/{id}/comb?scale=-1"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(&app, "POST", &format!("/doc/{id}/point"), Some(json!([9.0, 9.0]))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn error_statuses() {
    let app = app(None);
    let (status, body) = call(&app, "GET", "/doc/77", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("77"));
    let (status, _) = call(&app, "POST", "/doc/77/point", Some(json!([0, 0]))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, _) = call(&app, "POST", "/doc", Some(json!({ "continuity": "C9" }))).await;
    assert!(status.is_client_error());
    let (status, _) = call(&app, "POST", "/doc", Some(json!({ "weights": { "lambda_e": -1, "lambda_c": 0 } }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let id = create(&app, "C1").await;
    let (status, _) = call(&app, "POST", &format!("/doc/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    call(&app, "POST", &format!("/doc/{id}/point"), Some(json!([0, 0]))).await;
    let (status, _) = call(&app, "POST", &format!("/doc/{id}/point"), Some(json!([0, 0]))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(&app, "POST", &format!("/doc/{id}/move"), Some(json!({ "index": 5, "point": [1, 1] }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(&app, "POST", &format!("/doc/{id}/point"), Some(json!({ "pt": [1, 1] }))).await;
    assert!(status.is_client_error());
}

#[tokio::test]
async fn stale_revisions_conflict() {
    let app = app(None);
    let id = filled(&app, "C1").await;
    let rev = POINTS.len() as u64;
    let (status, body) = call(&app, "POST", &format!("/doc/{id}/point"), Some(json!({ "point": [6, 0], "revision": rev - 1 }))).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    let (status, _) = call(&app, "POST", &format!("/doc/{id}/point"), Some(json!({ "point": [6, 0], "revision": rev }))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&app, "POST", &format!("/doc/{id}/undo"), Some(json!({ "revision": rev }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_edits_on_one_revision() {
    let app = app(None);
    let id = filled(&app, "C2").await;
    let rev = POINTS.len() as u64;
    let uri = format!("/doc/{id}/move");
    let a = call(&app, "POST", &uri, Some(json!({ "index": 1, "point": [1.0, 0.9], "revision": rev })));
    let b = call(&app, "POST", &uri, Some(json!({ "index": 4, "point": [4.0, 0.1], "revision": rev })));
    let ((sa, _), (sb, _)) = tokio::join!(a, b);
    let mut statuses = [sa, sb];
    statuses.sort();
    assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT]);
    let (_, file) = call(&app, "GET", &format!("/doc/{id}"), None).await;
    let moved = [&file["points"][1], &file["points"][4]];
    assert!(moved.contains(&&json!([1.0, 0.9])) ^ moved.contains(&&json!([4.0, 0.1])));
}

#[tokio::test]
async fn solver_failure_is_a_server_error() {
    let app = app(None);
    let settings = json!({ "solver": { "constraint_tolerance": 1e-300, "max_iterations": 1 } });
    let (status, body) = call(&app, "POST", "/doc", Some(settings)).await;
    assert_eq!(status, StatusCode::OK);
    let id = body["id"].as_u64().unwrap();
    let mut last = StatusCode::OK;
    for p in POINTS {
        last = call(&app, "POST", &format!("/doc/{id}/point"), Some(json!(p))).await.0;
        if last != StatusCode::OK {
            break;
        }
    }
    assert_eq!(last, StatusCode::INTERNAL_SERVER_ERROR);
}

#[tokio::test]
async fn snapshots_follow_revisions() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(Some(dir.path().to_path_buf()));
    let id = filled(&app, "C1").await;
    call(&app, "POST", &format!("/doc/{id}/undo"), None).await;
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), POINTS.len() + 2);
    assert_eq!(names[0], format!("doc-{id}-rev-000000.json"));
    let last = std::fs::read_to_string(dir.path().join(names.last().unwrap())).unwrap();
    let (_, current) = call(&app, "GET", &format!("/doc/{id}"), None).await;
    assert_eq!(serde_json::from_str::<Value>(&last).unwrap(), current);
}

#[tokio::test]
async fn changed_indices_are_exactly_the_differing_segments() {
    let app = app(None);
    let id = filled(&app, "G1").await;
    let edits = [
        ("move", json!({ "index": 3, "point": [3.0, 1.3] })),
        ("move", json!({ "index": 0, "point": [-0.2, 0.1] })),
        ("close", Value::Null),
        ("move", json!({ "index": 5, "point": [5.1, 0.8] })),
        ("undo", Value::Null),
    ];
    let (_, mut before) = call(&app, "GET", &format!("/doc/{id}"), None).await;
    let mut revision = POINTS.len() as u64;
    for (op, body) in edits {
        let body = if body.is_null() { None } else { Some(body) };
        let (status, delta) = call(&app, "POST", &format!("/doc/{id}/{op}"), body).await;
        assert_eq!(status, StatusCode::OK, "{op}: {delta}");
        assert!(delta["revision"].as_u64().unwrap() > revision);
        revision = delta["revision"].as_u64().unwrap();
        let (_, after) = call(&app, "GET", &format!("/doc/{id}"), None).await;
        let old = before["segments"].as_array().unwrap();
        let new = after["segments"].as_array().unwrap();
        let differing: Vec<u64> = (0..new.len()).filter(|&i| old.get(i) != Some(&new[i])).map(|i| i as u64).collect();
        let reported: Vec<u64> = delta["changed_segment_indices"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        assert_eq!(reported, differing, "{op}");
        before = after;
    }
}
