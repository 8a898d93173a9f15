use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use covermine::agent::AgentConfig;
use covermine::fixtures;
use covermine::session::{Session, SessionConfig};
use covermine_server::api::router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app_with(data: covermine::model::Dataset, agent: AgentConfig) -> (Router, Arc<Session>) {
    let config = SessionConfig {
        agent,
        ..SessionConfig::default()
    };
    let session = Arc::new(Session::new(data, config).unwrap());
    (router(session.clone(), None), session)
}

fn app() -> (Router, Arc<Session>) {
    app_with(fixtures::fig1(), AgentConfig::default())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body)).await
}

#[tokio::test]
async fn fresh_status_is_empty() {
    let (app, _) = app();
    let (code, s) = get(&app, "/status").await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(s["runningAgents"], 0);
    assert_eq!(s["frontSize"], 0);
    assert_eq!(s["records"], 5);
    assert_eq!(s["logPosition"], 0);
    let (_, f) = get(&app, "/front").await;
    assert_eq!(f["entries"], json!([]));
    assert_eq!(f["objectives"], json!(["selectedCount", "missedCauses", "complexity"]));
    assert_eq!(f["best"], Value::Null);
}

#[tokio::test]
async fn invalid_ruleset_reports_position() {
    let (app, _) = app();
    let (code, e) = post(&app, "/rulesets", json!({"ruleset": "(lang = java and)"})).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(e["position"].is_u64(), "{e}");
    assert!(e["error"].as_str().unwrap().contains("syntax"));

    let (code, _) = post(&app, "/rulesets", json!({"ruleset": "(colour = red)"})).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    let (code, _) = post(&app, "/rulesets", json!({"text": "(size <= 3)"})).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn submit_browse_and_steer() {
    let (app, _) = app();
    let (code, out) = post(&app, "/rulesets", json!({"ruleset": "(size <= 3)"})).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(out["frontStatus"], "added");
    assert_eq!(out["evaluation"]["result"]["selectedCount"], 1);
    let seq = out["seq"].as_u64().unwrap();
    assert!(seq >= 1);
    // dominated by `(size <= 3)`
    let (_, out) = post(&app, "/rulesets", json!({"ruleset": "(lang = java)"})).await;
    assert_eq!(out["frontStatus"], "dominated");
    let (_, out) = post(&app, "/rulesets", json!({"ruleset": "(false)"})).await;
    assert_eq!(out["frontStatus"], "added");

    let (_, front) = get(&app, "/front").await;
    let entries = front["entries"].as_array().unwrap();
    assert!(entries.len() >= 2);
    let best = front["best"].as_str().unwrap().to_string();

    let (code, e) = get(&app, &format!("/front/{best}")).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(e["id"], best.as_str());
    assert_eq!(e["rules"][0]["visited"], false);
    let (code, _) = get(&app, "/front/0000000000000000").await;
    assert_eq!(code, StatusCode::NOT_FOUND);

    let (code, b) = get(&app, "/front/best?dim=missedCauses").await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(b["evaluation"]["objectives"][1], 0.0);
    let (code, _) = get(&app, "/front/best?dim=9").await;
    assert_eq!(code, StatusCode::BAD_REQUEST);

    let id = b["id"].as_str().unwrap();
    let (code, n) = get(&app, &format!("/front/navigate?from={id}&dim=0&dir=down")).await;
    assert_eq!(code, StatusCode::OK);
    assert!(n["atBoundary"].is_boolean());
    let (code, n2) = get(&app, &format!("/front/navigate?from={id}&dim=selectedCount&dir=up")).await;
    assert_eq!(code, StatusCode::OK);
    assert!(n2["entry"]["id"].is_string());

    // marks appear on the entry view
    let (code, _) = post(&app, "/feedback/visited", json!({"rule": "size <= 3"})).await;
    assert_eq!(code, StatusCode::OK);
    let (code, acc) = post(&app, "/feedback/accept", json!({"rule": "size <= 3"})).await;
    assert_eq!(code, StatusCode::OK);
    let accept_id = acc["id"].as_u64().unwrap();
    let (_, front) = get(&app, "/front").await;
    let entry = front["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["ruleset"] == "(size <= 3)")
        .unwrap();
    let (_, e) = get(&app, &format!("/front/{}", entry["id"].as_str().unwrap())).await;
    let marks = e["rules"].as_array().unwrap();
    assert!(marks
        .iter()
        .any(|m| m["rule"] == "(size <= 3)" && m["visited"] == true && m["accepted"] == true), "{e}");

    // rejecting an accepted rule conflicts
    let (code, _) = post(&app, "/feedback/reject", json!({"rule": "size <= 3"})).await;
    assert_eq!(code, StatusCode::CONFLICT);
    let (code, _) = post(&app, "/feedback/undo", json!({"id": accept_id})).await;
    assert_eq!(code, StatusCode::OK);
    let (code, rej) = post(&app, "/feedback/reject", json!({"pattern": "lang"})).await;
    assert_eq!(code, StatusCode::OK, "{rej}");
    let (_, front) = get(&app, "/front").await;
    for e in front["entries"].as_array().unwrap() {
        assert!(!e["ruleset"].as_str().unwrap().contains("lang"));
    }
    let (code, _) = call(&app, Method::POST, "/feedback/undo", None).await;
    assert_eq!(code, StatusCode::OK);
    let (code, _) = post(&app, "/feedback/undo", json!({"id": 999})).await;
    assert_eq!(code, StatusCode::NOT_FOUND);

    let (code, _) = post(&app, "/target-function", json!({"target": "weighted:1,5,0.1"})).await;
    assert_eq!(code, StatusCode::OK);
    let (code, _) = post(&app, "/target-function", json!({"target": "weighted:1"})).await;
    assert!(code.is_client_error());
    let (code, _) = post(&app, "/bounds", json!({"bounds": [null, 0, null]})).await;
    assert_eq!(code, StatusCode::OK);
    let (_, s) = get(&app, "/status").await;
    assert_eq!(s["target"], "weighted:1,5,0.1");
    assert_eq!(s["bounds"], json!([null, 0.0, null]));

    let (code, t) = post(&app, "/front/trim", json!({"keep": 1, "sample": 10, "seed": 3})).await;
    assert_eq!(code, StatusCode::OK, "{t}");
    let (_, s) = get(&app, "/status").await;
    assert!(s["frontSize"].as_u64().unwrap() <= 1);
}

#[tokio::test]
async fn data_endpoints() {
    let (app, _) = app();
    let (code, st) = get(&app, "/stats").await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(st["records"], 5);
    let size = st["features"].as_array().unwrap().iter().find(|f| f["feature"] == "size").unwrap();
    assert_eq!(size["kind"], "numeric");
    assert_eq!(size["min"], 3.0);
    assert_eq!(size["max"], 12.0);

    let (_, st) = get(&app, "/stats?ruleset=(lang%20%3D%20java)").await;
    assert_eq!(st["records"], 3);
    let (code, _) = get(&app, "/stats?ruleset=(lang%20%3D)").await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);

    let (_, sample) = get(&app, "/records/sample?n=2&seed=1").await;
    assert_eq!(sample.as_array().unwrap().len(), 2);
    let (code, m) = get(&app, "/records/misclassified?ruleset=(lang%20%3D%20java)").await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(m["falsePositives"][0]["id"], "I5");
    assert_eq!(m["missedCauses"], json!({}));
    let (code, _) = get(&app, "/records/misclassified").await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let (_, d) = get(&app, "/records/default-branch?ruleset=(lang%20%3D%20java)").await;
    let ids: Vec<&str> = d.as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["I3", "I4"]);

    let (code, _) = post(&app, "/features/computed", json!({"name": "half", "expression": "size / 2"})).await;
    assert_eq!(code, StatusCode::OK);
    let (code, e) = post(&app, "/features/computed", json!({"name": "bad", "expression": "size +"})).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(e["position"].is_u64());
    let (code, _) = post(&app, "/features/computed", json!({"name": "half", "expression": "size"})).await;
    assert_eq!(code, StatusCode::CONFLICT);

    let (code, _) = post(&app, "/records/relabel", json!({"record": "I9", "causes": []})).await;
    assert_eq!(code, StatusCode::NOT_FOUND);
    let (code, _) = post(&app, "/records/relabel", json!({"record": "I5", "causes": ["C3"]})).await;
    assert_eq!(code, StatusCode::OK);
    let (code, r) = post(&app, "/records/remove", json!({"predicate": "(half >= 6)"})).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(r["removedCount"], 1);
    let (_, s) = get(&app, "/status").await;
    assert_eq!(s["records"], 4);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn agents_and_log() {
    let (data, _) = fixtures::planted(150, 0.05, 1);
    let (app, session) = app_with(data, AgentConfig::default());
    let (code, e) = post(&app, "/agents/start", json!({"n": 0})).await;
    assert_eq!(code, StatusCode::BAD_REQUEST, "{e}");
    let (code, out) = post(&app, "/agents/start", json!({"n": 2, "seed": 5})).await;
    assert_eq!(code, StatusCode::OK, "{out}");
    assert_eq!(out["agents"], 2);
    let (_, s) = get(&app, "/status").await;
    assert_eq!(s["runningAgents"], 2);
    let (code, _) = post(&app, "/agents/start", json!({"n": 1})).await;
    assert_eq!(code, StatusCode::CONFLICT);

    // reads answer while agents run
    let (code, _) = get(&app, "/front").await;
    assert_eq!(code, StatusCode::OK);

    let (_, page) = get(&app, "/log?since=0").await;
    let position = page["position"].as_u64().unwrap();
    assert!(position >= 3);
    assert_eq!(page["entries"][0]["seq"], 1);
    assert_eq!(page["entries"][0]["type"], "action");

    let (code, _) = call(&app, Method::POST, "/agents/stop", None).await;
    assert_eq!(code, StatusCode::OK);
    let (_, s) = get(&app, "/status").await;
    assert_eq!(s["runningAgents"], 0);
    assert_eq!(s["agents"].as_array().unwrap().len(), 2);

    // long poll returns as soon as something is appended
    let tail = session.log().position();
    let waiter = {
        let app = app.clone();
        tokio::spawn(async move { get(&app, &format!("/log?since={tail}&wait=10000")).await })
    };
    tokio::time::sleep(Duration::from_millis(100)).await;
    post(&app, "/rulesets", json!({"ruleset": "(x2 >= 70)"})).await;
    let (code, page) = tokio::time::timeout(Duration::from_secs(5), waiter).await.unwrap().unwrap();
    assert_eq!(code, StatusCode::OK);
    assert!(!page["entries"].as_array().unwrap().is_empty());
    assert!(page["position"].as_u64().unwrap() > tail);

    let (_, empty) = get(&app, "/log?since=100000").await;
    assert_eq!(empty["entries"], json!([]));
}

#[tokio::test]
async fn serves_ui_directory() {
    let (app, _) = app();
    let (code, page) = get(&app, "/").await;
    assert_eq!(code, StatusCode::OK);
    assert!(page.as_str().unwrap().contains("covermine"));

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>front navigator</h1>").unwrap();
    std::fs::write(dir.path().join("app.js"), "console.log(1)").unwrap();
    let session = Arc::new(Session::new(fixtures::fig1(), SessionConfig::default()).unwrap());
    let app = router(session, Some(dir.path().to_path_buf()));
    let (code, page) = get(&app, "/").await;
    assert_eq!(code, StatusCode::OK);
    assert!(page.as_str().unwrap().contains("front navigator"));
    let (code, _) = get(&app, "/app.js").await;
    assert_eq!(code, StatusCode::OK);
    let (code, _) = get(&app, "/status").await;
    assert_eq!(code, StatusCode::OK);
}
