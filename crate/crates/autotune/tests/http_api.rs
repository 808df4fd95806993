mod common;

use std::sync::Arc;

use autotune::http::router;
use autotune::service::Service;
use autotune::store::{Job, Store};
use autotune_core::shape::Origin;
use autotune_core::tuner::TuneConfig;
use autotune_core::{DetectionOutcome, PatternLabel};
use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(dir: &std::path::Path) -> (Router, Arc<Service>) {
    let svc = Arc::new(Service::new(Store::open(dir).unwrap(), common::quick_model(), TuneConfig::default()));
    (router(svc.clone()), svc)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

fn parse(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

async fn submit_sine(app: &Router) -> Job {
    let x = common::sine_with_spikes(480);
    let (status, body) = call(app, "POST", "/v1/jobs", Some(json!({"series": {"values": x.values()}, "sensitivity": 0.01}))).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    serde_json::from_slice(&body).unwrap()
}

#[tokio::test]
async fn health_reports_model() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let (status, body) = call(&app, "GET", "/v1/health", None).await;
    assert_eq!(status, StatusCode::OK);
    let v = parse(&body);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["model_version"], "gasf-cnn-v1");
}

#[tokio::test]
async fn sine_job_lands_near_target() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let job = submit_sine(&app).await;
    assert_eq!(job.label, PatternLabel::Seasonal { period: 24 });
    // the realized ratio is at most the gap to the nearest candidate on the curve
    let nearest = job
        .candidates
        .merged
        .iter()
        .filter_map(|&t| job.curve.ratio_at(t))
        .map(|p| (p - 0.01).abs())
        .fold(f64::INFINITY, f64::min);
    assert!((job.outcome.realized_ratio - 0.01).abs() <= nearest + 1e-12);
    for i in [120, 240, 360] {
        assert!(job.outcome.anomalies.is_set(i), "spike {i} missed");
    }
}

#[tokio::test]
async fn csv_inline_and_resubmission() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let csv = common::csv_of(&common::sine_with_spikes(300));
    let (s1, a) = call(&app, "POST", "/v1/jobs", Some(json!({"csv": csv, "sensitivity": 0.02}))).await;
    let (s2, b) = call(&app, "POST", "/v1/jobs", Some(json!({"csv": csv, "sensitivity": 0.02}))).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    let (a, b): (Job, Job) = (serde_json::from_slice(&a).unwrap(), serde_json::from_slice(&b).unwrap());
    assert_ne!(a.job_id, b.job_id);
    assert_eq!(a.outcome, b.outcome);
    assert_eq!(a.params, b.params);
}

#[tokio::test]
async fn request_errors_have_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app(dir.path());
    let (s, body) = call(&app, "POST", "/v1/jobs", Some(json!({"series": {"values": [1, 2, 3]}, "sensitivity": 1.5}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(parse(&body)["code"], "invalid_sensitivity");

    let (s, body) = call(&app, "POST", "/v1/jobs", Some(json!({"sensitivity": 0.1}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(parse(&body)["code"], "bad_request");

    let req = Request::builder().method("POST").uri("/v1/jobs").header("content-type", "application/json");
    let resp = app.clone().oneshot(req.body(Body::from("{not json")).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);

    let (s, body) = call(&app, "GET", "/v1/jobs/does-not-exist", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let v = parse(&body);
    assert_eq!(v["code"], "unknown_job");
    assert!(v["message"].as_str().unwrap().contains("does-not-exist"));

    let (s, body) = call(&app, "GET", "/v2/nothing", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(parse(&body)["code"], "not_found");
}

#[tokio::test]
async fn finetune_accept_and_curve() {
    let dir = tempfile::tempdir().unwrap();
    let (app, svc) = app(dir.path());
    let job = submit_sine(&app).await;
    let base = format!("/v1/jobs/{}", job.job_id);

    let (s, body) = call(&app, "POST", &format!("{base}/accept"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(parse(&body)["code"], "no_feedback");

    let (s, body) = call(&app, "POST", &format!("{base}/finetune"), Some(json!({}))).await;
    assert_eq!(s, StatusCode::OK);
    let same: DetectionOutcome = serde_json::from_slice(&body).unwrap();
    assert_eq!(same, job.outcome);

    let ft = json!({"direction": "Up", "upper_baseline": 1e9});
    let (_, body) = call(&app, "POST", &format!("{base}/finetune"), Some(ft)).await;
    let empty: DetectionOutcome = serde_json::from_slice(&body).unwrap();
    assert_eq!(empty.anomalies.count(), 0);

    let bad = json!({"upper_baseline": 0.0, "lower_baseline": 1.0});
    let (s, body) = call(&app, "POST", &format!("{base}/finetune"), Some(bad)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(parse(&body)["code"], "invalid_baselines");

    let (s, body) = call(&app, "POST", &format!("{base}/accept"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(parse(&body), json!({"queued": true, "queue_len": 1}));
    let (_, body) = call(&app, "POST", &format!("{base}/accept"), None).await;
    assert_eq!(parse(&body), json!({"queued": false, "queue_len": 1}));
    let queue = svc.store().queue().unwrap();
    assert_eq!(queue[0].origin, Origin::Feedback);
    assert_eq!(queue[0].score, 1.0);
    assert_eq!(queue[0].u, empty.boundary.upper);

    let (s, body) = call(&app, "GET", &format!("{base}/curve"), None).await;
    assert_eq!(s, StatusCode::OK);
    let v = parse(&body);
    assert_eq!(v["curve"].as_array().unwrap().len(), 64);
    assert!(!v["candidates"]["merged"].as_array().unwrap().is_empty());
    assert_eq!(v["threshold"].as_f64().unwrap(), job.params.float("threshold").unwrap());
}

#[tokio::test]
async fn jobs_survive_restart_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let (app1, _) = app(dir.path());
    let job = submit_sine(&app1).await;
    let uri = format!("/v1/jobs/{}", job.job_id);
    let (_, before) = call(&app1, "GET", &uri, None).await;
    drop(app1);
    let (app2, _) = app(dir.path());
    let (s, after) = call(&app2, "GET", &uri, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(before, after);
    let reparsed: Job = serde_json::from_slice(&after).unwrap();
    assert_eq!(reparsed, job);
    let (s, _) = call(&app2, "POST", &format!("{uri}/finetune"), Some(json!({"threshold_mult": 2.0}))).await;
    assert_eq!(s, StatusCode::OK);
}
