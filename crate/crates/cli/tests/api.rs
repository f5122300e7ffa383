use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use peoplefinder::api::{router, AppState};
use peoplefinder::search::search;
use peoplefinder_core::pipeline::{build_engine, BuildConfig, SourceSet, System};
use peoplefinder_core::store::{load_snapshot, save_snapshot};
use peoplefinder_core::synth::{gen_synthetic, SynthConfig};

struct Fixture {
    _tmp: tempfile::TempDir,
    dir: std::path::PathBuf,
    state: Arc<AppState>,
    first_query: String,
}

fn fixture() -> Fixture {
    let synth = gen_synthetic(&SynthConfig::default(), 3).unwrap();
    let cfg = BuildConfig::default();
    let col = synth.collection(&cfg).unwrap();
    let engine = build_engine(&col, &SourceSet::all(), System::New, &cfg).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("idx");
    save_snapshot(&engine, &cfg, Vec::new(), &dir).unwrap();
    let snap = load_snapshot(&dir).unwrap();
    let first_query = synth.topics.iter().next().unwrap().query_text.clone();
    Fixture {
        state: Arc::new(AppState::new(snap, Some(dir.clone()))),
        dir,
        _tmp: tmp,
        first_query,
    }
}

async fn call(state: &Arc<AppState>, method: &str, uri: &str) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).body(Body::empty()).unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn encode(q: &str) -> String {
    q.replace(' ', "+")
}

#[tokio::test]
async fn search_returns_ranked_people_with_evidence() {
    let f = fixture();
    let (status, v) = call(&f.state, "GET", &format!("/api/search?q={}&k=3", encode(&f.first_query))).await;
    assert_eq!(status, StatusCode::OK);
    let results = v["results"].as_array().unwrap();
    assert!(!results.is_empty() && results.len() <= 3);
    let mut last = f64::INFINITY;
    for (i, r) in results.iter().enumerate() {
        assert_eq!(r["rank"], i + 1);
        let score = r["score"].as_f64().unwrap();
        assert!(score <= last);
        last = score;
        let sum: f64 = r["evidence"].as_array().unwrap().iter().map(|e| e["fragment_score"].as_f64().unwrap()).sum();
        assert!((sum - score).abs() <= 1e-9 * score.max(1.0));
    }
}

#[tokio::test]
async fn api_and_library_agree() {
    let f = fixture();
    let (_, v) = call(&f.state, "GET", &format!("/api/search?q={}", encode(&f.first_query))).await;
    let direct = search(&f.state.current(), &f.first_query, 10, None).unwrap();
    assert_eq!(v, serde_json::to_value(&direct).unwrap());
}

#[tokio::test]
async fn bad_requests_are_rejected() {
    let f = fixture();
    for uri in ["/api/search?q=", "/api/search?q=x&k=0", "/api/search?q=x&k=abc", "/api/search"] {
        let (status, v) = call(&f.state, "GET", uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert!(v["error"].is_string());
    }
}

#[tokio::test]
async fn person_and_relationships() {
    let f = fixture();
    let (status, v) = call(&f.state, "GET", "/api/person/nobody").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(v["error"].is_string());
    let (status, _) = call(&f.state, "GET", "/api/person/nobody/relationships").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = f.state.current().org.persons.keys().next().unwrap().clone();
    let (status, p) = call(&f.state, "GET", &format!("/api/person/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(p["person_id"], id.as_str());
    let weights: Vec<f64> = p["evidence"].as_array().unwrap().iter().map(|e| e["final_weight"].as_f64().unwrap()).collect();
    assert!(weights.windows(2).all(|w| w[0] >= w[1]));

    let (status, r) = call(&f.state, "GET", &format!("/api/person/{id}/relationships")).await;
    assert_eq!(status, StatusCode::OK);
    let rels = r["relationships"].as_array().unwrap();
    assert!(!rels.is_empty());
    assert!(rels.iter().all(|e| e["person_id"] != id.as_str()));
}

#[tokio::test]
async fn health_and_reload() {
    let f = fixture();
    let (status, h) = call(&f.state, "GET", "/api/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(h["status"], "ok");
    assert_eq!(h["run_tag"], "new-web+db");
    assert_eq!(h["stats"]["persons"], 20);
    let (status, r) = call(&f.state, "POST", "/api/reload").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["manifest_hash"], h["manifest_hash"]);

    let mut other = BuildConfig::default();
    other.index.k1 = 2.0;
    let synth = gen_synthetic(&SynthConfig::default(), 3).unwrap();
    let col = synth.collection(&other).unwrap();
    let engine = build_engine(&col, &SourceSet::all(), System::New, &other).unwrap();
    save_snapshot(&engine, &other, Vec::new(), &f.dir).unwrap();
    let (status, v) = call(&f.state, "POST", "/api/reload").await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(v["error"].is_string());
    let (_, still) = call(&f.state, "GET", "/api/health").await;
    assert_eq!(still["manifest_hash"], h["manifest_hash"]);
}

#[tokio::test]
async fn shared_project_is_reported_as_an_edge() {
    use peoplefinder_core::pipeline::{Collection, CollectionText};
    let org = r#"<org>
  <project id="expert">
    <title>Expert finding</title>
    <descriptionurls><url>http://www.example.org/expert/</url></descriptionurls>
    <member personID="p1"/>
    <member personID="p2"/>
  </project>
  <person id="p1"><name>Ana Lima</name></person>
  <person id="p2"><name>Bo Chen</name></person>
  <person id="p3"><name>Cy Park</name></person>
</org>"#;
    let corpus = r#"{"doc_id":"d1","url":"http://www.example.org/expert/","source":"extranet","title":"Expert finding","content":"data mining for expert finding"}"#;
    let cfg = BuildConfig::default();
    let col = Collection::parse(
        &CollectionText { corpus, links: "", aliases: "", org: org.as_bytes() },
        &cfg,
    )
    .unwrap();
    let engine = build_engine(&col, &SourceSet::all(), System::New, &cfg).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    save_snapshot(&engine, &cfg, Vec::new(), tmp.path()).unwrap();
    let state = Arc::new(AppState::new(load_snapshot(tmp.path()).unwrap(), None));

    let (status, v) = call(&state, "GET", "/api/person/p1/relationships").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        v["relationships"],
        serde_json::json!([{"person_id": "p2", "display_name": "Bo Chen", "via": "project", "id": "expert"}])
    );
    let (_, v) = call(&state, "GET", "/api/person/p3/relationships").await;
    assert_eq!(v["relationships"], serde_json::json!([]));

    let (_, v) = call(&state, "GET", "/api/search?q=data+mining&k=3").await;
    let ids: Vec<&str> = v["results"].as_array().unwrap().iter().map(|r| r["person_id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), 2);
    assert!(ids.contains(&"p1") && ids.contains(&"p2"));

    let (status, _) = call(&state, "POST", "/api/reload").await;
    assert_eq!(status, StatusCode::CONFLICT);
}
