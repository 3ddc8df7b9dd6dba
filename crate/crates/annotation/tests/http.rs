use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use clarte::evaluation::{bws_scores, generate_bws_design, read_jsonl, BwsDesign, BwsResponse};
use clarte_annotation::http::router;
use clarte_annotation::{Store, StoreOptions};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn design(t: usize, e: usize, a: usize) -> BwsDesign {
    let ids: Vec<String> = (0..t).map(|i| format!("x{i:02}")).collect();
    generate_bws_design(&ids, e, 3, a, 1).unwrap()
}

fn payload(design: &BwsDesign) -> Value {
    let texts: serde_json::Map<String, Value> =
        design.texts.iter().map(|t| (t.clone(), json!(format!("Texte {t}.")))).collect();
    json!({ "kind": "bws", "design": design, "texts": texts })
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let request = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(b) => request.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => request.body(Body::empty()),
    }
    .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    (status, response.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn app(dir: &tempfile::TempDir, static_dir: Option<std::path::PathBuf>) -> Router {
    router(Arc::new(Store::open(dir.path().join("data"), StoreOptions::default()).unwrap()), static_dir)
}

fn answer(task: &Value, annotator: &str) -> Value {
    let texts = task["texts"].as_array().unwrap();
    json!({
        "tuple_id": task["tuple_id"],
        "annotator_id": annotator,
        "best": texts[0]["id"],
        "worst": texts[2]["id"],
    })
}

#[tokio::test]
async fn campaign_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir, None);
    let d = design(6, 2, 1);
    let (status, created) = call_json(&app, "POST", "/api/campaigns", Some(payload(&d))).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["id"].as_str().unwrap().to_string();
    let (status, again) = call_json(&app, "POST", "/api/campaigns", Some(payload(&d))).await;
    assert_eq!((status, again["id"].as_str()), (StatusCode::OK, Some(id.as_str())));

    let mut bad = payload(&d);
    bad["texts"].as_object_mut().unwrap().remove("x01");
    assert_eq!(call(&app, "POST", "/api/campaigns", Some(bad)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(call(&app, "GET", "/api/campaigns/nope/next?annotator=a", None).await.0, StatusCode::NOT_FOUND);

    let (status, export) = call(&app, "GET", &format!("/api/campaigns/{id}/export"), None).await;
    assert_eq!((status, export.len()), (StatusCode::OK, 0));

    let next = format!("/api/campaigns/{id}/next?annotator=ann");
    let (_, body) = call_json(&app, "GET", &next, None).await;
    let task = body["task"].clone();
    assert_eq!(task["kind"], "bws");
    assert_eq!(task["tuple_id"], d.tuples[0].id.as_str());
    assert_eq!(task["texts"][0]["text"], format!("Texte {}.", task["texts"][0]["id"].as_str().unwrap()));

    let submit = format!("/api/campaigns/{id}/responses");
    let mut same = answer(&task, "ann");
    same["worst"] = same["best"].clone();
    assert_eq!(call(&app, "POST", &submit, Some(same)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, ack) = call_json(&app, "POST", &submit, Some(answer(&task, "ann"))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(ack["progress"]["completed"], 1);
    assert_eq!(call(&app, "POST", &submit, Some(answer(&task, "ann"))).await.0, StatusCode::CONFLICT);

    let (_, progress) = call_json(&app, "GET", &format!("/api/campaigns/{id}/progress"), None).await;
    assert_eq!(progress["slots"], 4);
    assert_eq!(progress["remaining"], 3);

    let (_, list) = call_json(&app, "GET", "/api/campaigns", None).await;
    assert_eq!(list["campaigns"], json!([id]));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn fifty_concurrent_annotators_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir, None);
    let d = design(48, 12, 3);
    let (_, created) = call_json(&app, "POST", "/api/campaigns", Some(payload(&d))).await;
    let id = created["id"].as_str().unwrap().to_string();
    let workers: Vec<_> = (0..50)
        .map(|n| {
            let (app, id) = (app.clone(), id.clone());
            tokio::spawn(async move {
                let name = format!("ann{n:02}");
                let mut accepted = 0;
                loop {
                    let (_, body) = call_json(&app, "GET", &format!("/api/campaigns/{id}/next?annotator={name}"), None).await;
                    if body["task"].is_null() {
                        return accepted;
                    }
                    let (status, _) =
                        call(&app, "POST", &format!("/api/campaigns/{id}/responses"), Some(answer(&body["task"], &name))).await;
                    assert_eq!(status, StatusCode::CREATED);
                    accepted += 1;
                }
            })
        })
        .collect();
    let mut total = 0;
    for w in workers {
        total += w.await.unwrap();
    }
    assert_eq!(total, 576);
    let (_, export) = call(&app, "GET", &format!("/api/campaigns/{id}/export"), None).await;
    let responses: Vec<BwsResponse> = read_jsonl(&export[..]).unwrap();
    assert_eq!(responses.len(), 576);
    let sorted = {
        let mut s = responses.clone();
        s.sort_by(|a, b| (&a.tuple_id, &a.annotator_id, a.timestamp).cmp(&(&b.tuple_id, &b.annotator_id, b.timestamp)));
        s
    };
    assert_eq!(responses, sorted);
    assert_eq!(bws_scores(&d, &responses).unwrap().len(), 48);
}

#[tokio::test]
async fn rating_campaigns_and_static_files() {
    let dir = tempfile::tempdir().unwrap();
    let web = dir.path().join("web");
    std::fs::create_dir_all(&web).unwrap();
    std::fs::write(web.join("index.html"), "<h1>annoter</h1>").unwrap();
    let app = app(&dir, Some(web));
    let (status, page) = call(&app, "GET", "/index.html", None).await;
    assert_eq!((status, page.as_slice()), (StatusCode::OK, &b"<h1>annoter</h1>"[..]));

    let spec = json!({ "kind": "rating", "text_ids": ["a", "b"], "raters": 1, "texts": { "a": "Un.", "b": "Deux." } });
    let (_, created) = call_json(&app, "POST", "/api/campaigns", Some(spec)).await;
    let id = created["id"].as_str().unwrap();
    let (_, body) = call_json(&app, "GET", &format!("/api/campaigns/{id}/next?annotator=r"), None).await;
    assert_eq!(body["task"], json!({ "kind": "rating", "campaign": id, "text_id": "a", "text": "Un." }));
    let submit = format!("/api/campaigns/{id}/responses");
    let rating = |v: f64| Some(json!({ "text_id": "a", "rater_id": "r", "rating": v }));
    assert_eq!(call(&app, "POST", &submit, rating(140.0)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(call(&app, "POST", &submit, rating(64.0)).await.0, StatusCode::CREATED);
    assert_eq!(call(&app, "POST", &submit, Some(json!({ "nonsense": true }))).await.0, StatusCode::UNPROCESSABLE_ENTITY);
}
