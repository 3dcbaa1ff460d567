use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use d2wgan::core::dsp::{SampleRate, Waveform};
use d2wgan::evalset::{EvalRow, Role};
use d2wgan::listen::{router, Catalog, ListenService, Protocol};
use d2wgan::wav::write_wav;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

/// `n` pairs on disk; every pair gets the given model and dataset labels.
fn catalog(dir: &Path, n: usize, model: &str, dataset: &str) -> Catalog {
    std::fs::create_dir_all(dir.join("clips")).unwrap();
    let mut rows = Vec::new();
    for i in 0..n {
        for role in [Role::Real, Role::Reconstructed] {
            let pid = format!("p{:03}", 2 * i + (role == Role::Reconstructed) as usize);
            let path = format!("clips/{pid}.wav");
            let w = Waveform::new(
                vec![0.01 * i as f64 + 0.005 * (role == Role::Reconstructed) as u8 as f64; 32],
                SampleRate::from_hz(8000),
            )
            .unwrap();
            write_wav(dir.join(&path), &w).unwrap();
            rows.push(EvalRow {
                presentation_id: pid,
                pair_id: format!("pair{i:03}"),
                role,
                path,
                blinded: true,
                model: model.into(),
                dataset: dataset.into(),
            });
        }
    }
    Catalog::new(rows, dir).unwrap()
}

fn app(dir: &Path, n: usize, protocol: Protocol) -> Router {
    let svc = ListenService::open(
        catalog(dir, n, "wgan", "piano"),
        protocol,
        dir.join("state"),
    )
    .unwrap();
    router(Arc::new(svc), None)
}

struct Reply {
    status: StatusCode,
    headers: axum::http::HeaderMap,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap()
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Reply {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    Reply {
        status,
        headers,
        body,
    }
}

fn error_code(r: &Reply) -> String {
    r.json()["error"]["code"].as_str().unwrap().to_string()
}

const LABEL_KEYS: [&str; 5] = ["model", "dataset", "role", "pair_id", "blinded"];

fn assert_blind(v: &Value) {
    let obj = v.as_object().unwrap();
    for k in LABEL_KEYS {
        assert!(!obj.contains_key(k), "label {k} leaked in {v}");
    }
}

async fn new_session(app: &Router, grader: &str, seed: u64) -> String {
    let r = call(
        app,
        "POST",
        "/v1/sessions",
        Some(json!({"grader_id": grader, "seed": seed})),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    r.json()["session_id"].as_str().unwrap().to_string()
}

async fn next_id(app: &Router, sid: &str) -> Option<String> {
    let r = call(app, "GET", &format!("/v1/sessions/{sid}/next"), None).await;
    match r.status {
        StatusCode::NO_CONTENT => None,
        StatusCode::OK => Some(r.headers["x-presentation-id"].to_str().unwrap().to_string()),
        s => panic!("unexpected {s}"),
    }
}

async fn grade(app: &Router, sid: &str, pid: &str, odg: i64) -> Reply {
    call(
        app,
        "POST",
        &format!("/v1/sessions/{sid}/grades"),
        Some(json!({"presentation_id": pid, "odg": odg})),
    )
    .await
}

#[tokio::test]
async fn empty_results_before_any_grade() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 3, Protocol::Unpaired);
    let r = call(&app, "GET", "/v1/results", None).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["empty"], json!(true));
    assert_eq!(v["rows"], json!([]));
    assert_eq!(v["overall"], json!([]));
    let h = call(&app, "GET", "/v1/health", None).await;
    assert_eq!(h.json()["status"], "ok");
}

#[tokio::test]
async fn session_flow_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 4, Protocol::Unpaired);
    let r = call(
        &app,
        "POST",
        "/v1/sessions",
        Some(json!({"grader_id": "g1", "seed": 5})),
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    let view = r.json();
    assert_blind(&view);
    assert_eq!(view["total"], 4);
    let sid = view["session_id"].as_str().unwrap().to_string();

    // a second create for the same grader resumes
    let again = call(
        &app,
        "POST",
        "/v1/sessions",
        Some(json!({"grader_id": "g1"})),
    )
    .await;
    assert_eq!(again.status, StatusCode::OK);
    assert_eq!(again.json()["session_id"], json!(sid));

    let first = call(&app, "GET", &format!("/v1/sessions/{sid}/next"), None).await;
    assert_eq!(first.status, StatusCode::OK);
    assert_eq!(first.headers["content-type"], "audio/wav");
    assert_eq!(first.headers["cache-control"], "no-store");
    assert_eq!(first.headers["x-progress"], "0/4");
    assert_eq!(&first.body[..4], b"RIFF");
    let pid = first.headers["x-presentation-id"]
        .to_str()
        .unwrap()
        .to_string();
    assert!(pid.starts_with('p'));
    // idempotent until graded
    assert_eq!(next_id(&app, &sid).await.unwrap(), pid);

    let r = grade(&app, &sid, &pid, -5).await;
    assert_eq!(
        (r.status, error_code(&r).as_str()),
        (StatusCode::UNPROCESSABLE_ENTITY, "grade_out_of_scale")
    );
    let r = grade(&app, &sid, "p999", -1).await;
    assert_eq!(
        (r.status, error_code(&r).as_str()),
        (StatusCode::CONFLICT, "stale_presentation")
    );
    let r = grade(&app, "missing", &pid, -1).await;
    assert_eq!(
        (r.status, error_code(&r).as_str()),
        (StatusCode::NOT_FOUND, "session_not_found")
    );
    let r = call(
        &app,
        "POST",
        &format!("/v1/sessions/{sid}/grades"),
        Some(json!({"odg": 1})),
    )
    .await;
    assert_eq!(
        (r.status, error_code(&r).as_str()),
        (StatusCode::BAD_REQUEST, "invalid_request")
    );
    let r = call(&app, "GET", &format!("/v1/sessions/{sid}/reference"), None).await;
    assert_eq!(
        (r.status, error_code(&r).as_str()),
        (StatusCode::NOT_FOUND, "not_paired")
    );

    let ack = grade(&app, &sid, &pid, -1).await;
    assert_eq!(ack.status, StatusCode::OK);
    assert_blind(&ack.json());
    assert_eq!(ack.json()["graded"], 1);
    let r = grade(&app, &sid, &pid, -1).await;
    assert_eq!(
        (r.status, error_code(&r).as_str()),
        (StatusCode::CONFLICT, "already_graded")
    );

    while let Some(p) = next_id(&app, &sid).await {
        assert_eq!(grade(&app, &sid, &p, -2).await.status, StatusCode::OK);
    }
    let done = call(&app, "GET", &format!("/v1/sessions/{sid}/next"), None).await;
    assert_eq!(done.status, StatusCode::NO_CONTENT);
    assert_eq!(done.headers["x-session-complete"], "true");
    let view = call(&app, "GET", &format!("/v1/sessions/{sid}"), None)
        .await
        .json();
    assert_eq!(
        (view["graded"].clone(), view["complete"].clone()),
        (json!(4), json!(true))
    );
    let r = grade(&app, &sid, &pid, -1).await;
    assert_eq!(r.status, StatusCode::CONFLICT);

    let r = call(&app, "GET", "/v1/results?group_by=colour", None).await;
    assert_eq!(
        (r.status, error_code(&r).as_str()),
        (StatusCode::BAD_REQUEST, "invalid_group_by")
    );
    let t = call(&app, "GET", "/v1/results?group_by=model", None)
        .await
        .json();
    assert_eq!(t["rows"][0]["n"], 4);
    assert_eq!(t["rows"][0]["model"], "wgan");
}

#[tokio::test]
async fn paired_protocol_serves_the_real_reference() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 2, Protocol::Paired);
    let sid = new_session(&app, "g", 1).await;
    let pid = next_id(&app, &sid).await.unwrap();
    let r = call(&app, "GET", &format!("/v1/sessions/{sid}/reference"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    // labelled with the graded item, carrying its real counterpart
    assert_eq!(r.headers["x-presentation-id"], pid.as_str());
    let n: usize = pid[1..].parse().unwrap();
    let real = std::fs::read(dir.path().join(format!("clips/p{:03}.wav", n - 1))).unwrap();
    assert_eq!(r.body, real);
}

#[tokio::test]
async fn piano_wgan_grades_aggregate_to_the_published_mean() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 50, Protocol::Unpaired);
    let sid = new_session(&app, "panel", 11).await;
    // 1 × −1, 20 × −2, 29 × −3
    let mut grades: Vec<i64> = [vec![-1; 1], vec![-2; 20], vec![-3; 29]].concat();
    while let Some(p) = next_id(&app, &sid).await {
        let g = grades.pop().unwrap();
        assert_eq!(grade(&app, &sid, &p, g).await.status, StatusCode::OK);
    }
    assert!(grades.is_empty());
    let t = call(&app, "GET", "/v1/results", None).await.json();
    assert_eq!(t["empty"], json!(false));
    let row = &t["rows"][0];
    assert_eq!(
        (row["model"].clone(), row["dataset"].clone()),
        (json!("wgan"), json!("piano"))
    );
    assert_eq!(row["n"], 50);
    assert_eq!(
        row["counts"],
        json!({"0": 0, "-1": 1, "-2": 20, "-3": 29, "-4": 0})
    );
    assert!((row["mean"].as_f64().unwrap() + 2.56).abs() < 1e-12);
    assert!((t["overall"][0]["mean"].as_f64().unwrap() + 2.56).abs() < 1e-12);
}

#[tokio::test]
async fn single_grade_has_zero_spread() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 3, Protocol::Unpaired);
    let sid = new_session(&app, "g", 2).await;
    let pid = next_id(&app, &sid).await.unwrap();
    grade(&app, &sid, &pid, -3).await;
    let t = call(&app, "GET", "/v1/results", None).await.json();
    let row = &t["rows"][0];
    assert_eq!(row["n"], 1);
    assert_eq!(row["mean"], -3.0);
    assert_eq!(row["std"], 0.0);
}

#[tokio::test]
async fn graders_get_seeded_permutations_and_grades_survive_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let svc = ListenService::open(
        catalog(dir.path(), 12, "d2wgan", "maestro"),
        Protocol::Unpaired,
        dir.path().join("state"),
    )
    .unwrap();
    let a = router(Arc::new(svc), None);
    let s1 = new_session(&a, "one", 1).await;
    let s2 = new_session(&a, "two", 2).await;
    let mut o1 = Vec::new();
    let mut o2 = Vec::new();
    for _ in 0..12 {
        let p = next_id(&a, &s1).await.unwrap();
        grade(&a, &s1, &p, -1).await;
        o1.push(p);
        let p = next_id(&a, &s2).await.unwrap();
        grade(&a, &s2, &p, -2).await;
        o2.push(p);
    }
    assert_ne!(o1, o2);
    let mut sorted = o1.clone();
    sorted.sort();
    o2.sort();
    assert_eq!(sorted, o2);
    drop(a);

    let svc = ListenService::open(
        catalog(dir.path(), 12, "d2wgan", "maestro"),
        Protocol::Unpaired,
        dir.path().join("state"),
    )
    .unwrap();
    let b = router(Arc::new(svc), None);
    let t = call(&b, "GET", "/v1/results?group_by=model", None)
        .await
        .json();
    assert_eq!(t["rows"][0]["n"], 24);
    assert!((t["rows"][0]["mean"].as_f64().unwrap() + 1.5).abs() < 1e-12);
}
