use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pairclust::optimizer::srra_loop;
use pairclust::oracle::{generate_planted, PairOracle};
use pairclust_harness::server::router;
use pairclust_harness::{SessionConfig, SessionManager};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_current_thread().build().unwrap()
}

#[test]
fn scripted_labeler_matches_in_process_run() {
    runtime().block_on(async {
        let app = router(Arc::new(SessionManager::new()));
        for seed in 0..4u64 {
            let inst = generate_planted(&[3, 2], 0.2, seed).unwrap();
            let (status, created) = call(
                &app,
                Method::POST,
                "/sessions",
                Some(json!({"n": 5, "k": 2, "q": 2, "seed": seed})),
            )
            .await;
            assert_eq!(status, StatusCode::CREATED);
            let id = created["id"].as_str().unwrap().to_string();

            loop {
                let (status, batch) = call(&app, Method::GET, &format!("/sessions/{id}/batch"), None).await;
                assert_eq!(status, StatusCode::OK);
                let pairs = batch["pairs"].as_array().unwrap().clone();
                if pairs.is_empty() {
                    break;
                }
                for p in pairs {
                    let (u, v) = (p["u"].as_u64().unwrap() as usize, p["v"].as_u64().unwrap() as usize);
                    let key = pairclust::PairKey::new(u, v).unwrap();
                    let label = if inst.graph.has_edge(key) { "edge" } else { "nonedge" };
                    let (status, resp) = call(
                        &app,
                        Method::POST,
                        &format!("/sessions/{id}/labels"),
                        Some(json!({"u": u, "v": v, "label": label})),
                    )
                    .await;
                    assert_eq!(status, StatusCode::OK, "{resp}");
                    assert!(resp["pending_remaining"].is_u64());
                }
            }

            let (_, state) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;
            let config = SessionConfig::new(5, 2, 2, seed);
            let expected = srra_loop(
                &PairOracle::new(&inst.graph),
                &config.loop_config().unwrap(),
                &config.initial_clustering().unwrap(),
            )
            .unwrap();
            let labels: Vec<usize> = state["current_clustering"]
                .as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_u64().unwrap() as usize)
                .collect();
            assert_eq!(labels, expected.final_pivot().labels());
            assert_eq!(state["iteration"].as_u64().unwrap() as usize, expected.iterations());
            assert!(state["labels_collected"].as_u64().unwrap() > 0);
        }
    });
}

#[test]
fn error_statuses() {
    runtime().block_on(async {
        let app = router(Arc::new(SessionManager::new()));
        let (status, _) = call(&app, Method::GET, "/sessions/nope/batch", None).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        let (status, _) = call(&app, Method::GET, "/sessions/nope/state", None).await;
        assert_eq!(status, StatusCode::NOT_FOUND);

        let (_, created) = call(&app, Method::POST, "/sessions", Some(json!({"n": 5, "k": 2, "q": 2}))).await;
        let id = created["id"].as_str().unwrap();
        let (_, batch) = call(&app, Method::GET, &format!("/sessions/{id}/batch"), None).await;
        let first = batch["pairs"][0].clone();
        let body = json!({"u": first["u"], "v": first["v"], "label": "edge"});
        let labels = format!("/sessions/{id}/labels");
        let (status, _) = call(&app, Method::POST, &labels, Some(body.clone())).await;
        assert_eq!(status, StatusCode::OK);
        let (_, snap_before) = call(&app, Method::GET, &format!("/sessions/{id}/snapshot"), None).await;
        let (status, err) = call(&app, Method::POST, &labels, Some(body)).await;
        assert_eq!(status, StatusCode::CONFLICT);
        assert!(err["error"].as_str().unwrap().contains("already answered"));
        let (_, snap_after) = call(&app, Method::GET, &format!("/sessions/{id}/snapshot"), None).await;
        assert_eq!(snap_before, snap_after);

        let (status, _) = call(&app, Method::POST, &labels, Some(json!({"u": 2, "v": 2, "label": "edge"}))).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        let (status, _) = call(&app, Method::POST, &labels, Some(json!({"u": 0, "v": 1, "label": "maybe"}))).await;
        assert!(status.is_client_error());
        let (status, _) = call(&app, Method::POST, "/sessions", Some(json!({"n": 5, "k": 0}))).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
    });
}
