mod common;

use std::sync::Arc;
use std::time::Duration;

use common::TestServer;
use hapticmap_core::agent::{PromptBundle, Provider, ProviderError, SessionGeometry, FALLBACK_REPLY};
use hapticmap_core::api::{AskResponse, DatasetSummary, ErrorBody, SessionInfo};
use hapticmap_core::fixtures::{dataset_of, rect_zone, SEATTLE_CENTER};
use hapticmap_core::ZoneCategory;
use serde_json::{json, Value};

#[tokio::test]
async fn fixture_place_contains_space_needle() {
    let srv = TestServer::start().await;
    let ds = srv.seattle().await;
    assert!(ds.zones.iter().any(|z| z.name == "Space Needle"));
    assert_eq!(ds.zone_count, ds.zones.len());
    assert_eq!(ds.radius_m, 400.0);
    assert_eq!(ds.canvas.width_px, 800);
    assert_eq!(ds.canvas.meters_per_pixel, 1.0);

    // Cached on disk under the rounded key, and a repeat request reuses it.
    let path = srv.cache.path().join("datasets").join(format!("{}.json", ds.dataset_id));
    assert!(path.exists(), "{}", path.display());
    let again = srv.seattle().await;
    assert_eq!(again, ds);

    let full: Value = srv.get(&format!("/places/{}/dataset", ds.dataset_id)).await.json().await.unwrap();
    assert_eq!(full["zones"].as_array().unwrap().len(), ds.zone_count);
}

#[tokio::test]
async fn fixture_place_by_query_uses_the_bundled_table() {
    let srv = TestServer::start().await;
    let resp = srv
        .post("/places", json!({"query": "Space Needle", "source": "fixture", "radius_m": 200}))
        .await;
    assert_eq!(resp.status(), 200);
    let ds: DatasetSummary = resp.json().await.unwrap();
    assert_eq!(ds.place_query.as_deref(), Some("Space Needle"));
    assert_eq!(ds.radius_m, 200.0);
    assert!(ds.zones.iter().any(|z| z.name == "Space Needle"));
}

#[tokio::test]
async fn cached_dataset_survives_a_restart() {
    let first = TestServer::start().await;
    let ds = first.seattle().await;
    let cache = first.cache.path().to_path_buf();
    let second = TestServer::with_provider(Arc::new(hapticmap_core::agent::MockGroundedProvider::default()), |c| {
        c.cache_dir = Some(cache)
    })
    .await;
    let resp = second.get(&format!("/places/{}", ds.dataset_id)).await;
    assert_eq!(resp.status(), 200);
}

#[tokio::test]
async fn place_errors() {
    let srv = TestServer::start().await;
    let code = |r: reqwest::Response| r.status().as_u16();
    assert_eq!(code(srv.post("/places", json!({"lat": 47.6})).await), 422);
    assert_eq!(code(srv.post("/places", json!({"source": "overpass"})).await), 422);
    assert_eq!(code(srv.post("/places", json!({"fixture": "atlantis"})).await), 422);
    assert_eq!(
        code(srv.post("/places", json!({"source": "fixture", "radius_m": -5})).await),
        422
    );
    assert_eq!(code(srv.post("/places", json!({"lat": 95.0, "lon": 0.0})).await), 422);
    assert_eq!(code(srv.post("/places", json!({"bogus": 1})).await), 422);
    // Overpass is unreachable in tests: an upstream failure, not a client error.
    let resp = srv.post("/places", json!({"lat": 47.6, "lon": -122.3, "source": "overpass"})).await;
    assert_eq!(resp.status(), 502);
    let body: ErrorBody = resp.json().await.unwrap();
    assert_eq!(body.error, "upstream_failure");
    assert_eq!(code(srv.get("/places/nope").await), 404);
    assert_eq!(code(srv.get("/places/..%2Fetc").await), 404);
}

#[tokio::test]
async fn malformed_bodies_are_422() {
    let srv = TestServer::start().await;
    let ds = srv.seattle().await;
    let s = srv.session(&ds.dataset_id).await;
    let id = &s.session_id;
    let raw = |path: String, body: &'static str| {
        srv.http
            .post(srv.url(&path))
            .header("content-type", "application/json")
            .body(body)
            .send()
    };
    assert_eq!(raw("/sessions".into(), "{").await.unwrap().status(), 422);
    assert_eq!(raw(format!("/sessions/{id}/cursor"), r#"{"x":"a","y":1}"#).await.unwrap().status(), 422);
    assert_eq!(raw(format!("/sessions/{id}/ask"), r#"{"q":"hi"}"#).await.unwrap().status(), 422);
    assert_eq!(raw(format!("/sessions/{id}/ask"), r#"{"question":"  "}"#).await.unwrap().status(), 422);
    assert_eq!(raw(format!("/sessions/{id}/audio"), r#"{"enabled":"yes"}"#).await.unwrap().status(), 422);
    // No content type at all.
    let resp = srv.http.post(srv.url("/sessions")).body("{}").send().await.unwrap();
    assert_eq!(resp.status(), 422);
    let body: ErrorBody = resp.json().await.unwrap();
    assert_eq!(body.error, "unprocessable");
    let resp = srv.get(&format!("/sessions/{id}/screenshot?quality=0")).await;
    assert_eq!(resp.status(), 422);
    let resp = srv.get(&format!("/sessions/{id}/screenshot?quality=abc")).await;
    assert_eq!(resp.status(), 422);
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let srv = TestServer::start().await;
    assert_eq!(srv.post("/sessions", json!({"dataset_id": "missing"})).await.status(), 404);
    for path in ["/sessions/zzz", "/sessions/zzz/screenshot", "/sessions/zzz/layout"] {
        assert_eq!(srv.get(path).await.status(), 404, "{path}");
    }
    assert_eq!(srv.post("/sessions/zzz/cursor", json!({"x": 1, "y": 1})).await.status(), 404);
    assert_eq!(srv.post("/sessions/zzz/ask", json!({"question": "hi"})).await.status(), 404);
    assert_eq!(srv.post("/sessions/zzz/audio", json!({"enabled": true})).await.status(), 404);
    let resp = srv.http.delete(srv.url("/sessions/zzz")).send().await.unwrap();
    assert_eq!(resp.status(), 404);
}

#[tokio::test]
async fn delete_then_every_session_call_is_404() {
    let srv = TestServer::start().await;
    let ds = srv.seattle().await;
    let s = srv.session(&ds.dataset_id).await;
    let id = s.session_id.clone();
    assert_eq!(srv.get(&format!("/sessions/{id}")).await.status(), 200);
    let resp = srv.http.delete(srv.url(&format!("/sessions/{id}"))).send().await.unwrap();
    assert_eq!(resp.status(), 204);

    assert_eq!(srv.get(&format!("/sessions/{id}")).await.status(), 404);
    assert_eq!(srv.get(&format!("/sessions/{id}/screenshot")).await.status(), 404);
    assert_eq!(srv.get(&format!("/sessions/{id}/layout")).await.status(), 404);
    assert_eq!(srv.post(&format!("/sessions/{id}/cursor"), json!({"x": 1, "y": 1})).await.status(), 404);
    assert_eq!(srv.post(&format!("/sessions/{id}/ask"), json!({"question": "Where am I?"})).await.status(), 404);
    assert_eq!(srv.post(&format!("/sessions/{id}/audio"), json!({"enabled": false})).await.status(), 404);
    assert_eq!(srv.http.delete(srv.url(&format!("/sessions/{id}"))).send().await.unwrap().status(), 404);
    let ws = tokio_tungstenite::connect_async(srv.ws_url(&id)).await;
    match ws {
        Err(tokio_tungstenite::tungstenite::Error::Http(resp)) => assert_eq!(resp.status(), 404),
        other => panic!("expected 404 on upgrade, got {other:?}"),
    }
}

#[tokio::test]
async fn session_info_and_ids() {
    let srv = TestServer::start().await;
    let ds = srv.seattle().await;
    let a = srv.session(&ds.dataset_id).await;
    let b = srv.session(&ds.dataset_id).await;
    assert_ne!(a.session_id, b.session_id);
    assert_eq!(a.session_id.len(), 32);
    assert!(a.session_id.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!((a.cursor.x, a.cursor.y), (400.0, 400.0));
    assert!(a.passive_audio_enabled);
    assert_eq!(a.zones.len(), ds.zone_count);
    let health: Value = srv.get("/health").await.json().await.unwrap();
    assert_eq!(health["sessions"], 2);
    assert_eq!(health["provider"], "mock_grounded");
}

#[tokio::test]
async fn cursor_audio_layout_and_screenshot() {
    let srv = TestServer::start().await;
    let ds = srv.seattle().await;
    let (zone_id, x, y) = srv.point_inside(&ds, "Space Needle").await;
    let s = srv.session(&ds.dataset_id).await;
    let id = &s.session_id;
    // Sessions start at the canvas centre, which is on the Space Needle.
    assert_eq!(s.current_zone.as_deref(), Some(zone_id.as_str()));
    srv.post(&format!("/sessions/{id}/cursor"), json!({"x": 1.0, "y": 1.0})).await;

    let resp: Value = srv
        .post(&format!("/sessions/{id}/cursor"), json!({"x": x, "y": y}))
        .await
        .json()
        .await
        .unwrap();
    assert_eq!(resp["current_zone"], zone_id.as_str());
    let kinds: Vec<&str> = resp["events"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"zone_enter") && kinds.contains(&"audio_label"), "{kinds:?}");

    let layout: Value = srv.get(&format!("/sessions/{id}/layout")).await.json().await.unwrap();
    assert_eq!(layout["current_zone_line"], "Current zone: Space Needle (building)");
    assert_eq!(layout["neighbor_lines"].as_array().unwrap().len(), 10.min(ds.zone_count - 1));
    assert!(layout["text"].as_str().unwrap().starts_with("Current zone: Space Needle"));

    let resp: Value = srv
        .post(&format!("/sessions/{id}/audio"), json!({"enabled": false}))
        .await
        .json()
        .await
        .unwrap();
    assert_eq!(resp["passive_audio_enabled"], false);
    srv.post(&format!("/sessions/{id}/cursor"), json!({"x": 1.0, "y": 1.0})).await;
    let resp: Value = srv
        .post(&format!("/sessions/{id}/cursor"), json!({"x": x, "y": y}))
        .await
        .json()
        .await
        .unwrap();
    let enter = resp["events"].as_array().unwrap().iter().find(|e| e["kind"] == "zone_enter").unwrap();
    assert!(enter["speech_text"].is_null());
    assert!(enter["haptic"].is_object());
    assert!(!resp["events"].as_array().unwrap().iter().any(|e| e["kind"] == "audio_label"));

    let resp = srv.get(&format!("/sessions/{id}/screenshot")).await;
    assert_eq!(resp.status(), 200);
    assert_eq!(resp.headers()["content-type"], "image/jpeg");
    let bytes = resp.bytes().await.unwrap();
    assert_eq!(&bytes[..2], &[0xFF, 0xD8]);
    assert_eq!(&bytes[bytes.len() - 2..], &[0xFF, 0xD9]);
    let small = srv
        .get(&format!("/sessions/{id}/screenshot?quality=10&labels=true"))
        .await
        .bytes()
        .await
        .unwrap();
    assert!(small.len() < bytes.len());
}

#[tokio::test]
async fn ask_returns_grounded_turns() {
    let srv = TestServer::start().await;
    let ds = srv.seattle().await;
    let (_, x, y) = srv.point_inside(&ds, "Museum of Pop Culture").await;
    let s = srv.session(&ds.dataset_id).await;
    let id = &s.session_id;
    srv.post(&format!("/sessions/{id}/cursor"), json!({"x": x, "y": y})).await;
    let resp = srv.post(&format!("/sessions/{id}/ask"), json!({"question": "Hello, where am I?"})).await;
    assert_eq!(resp.status(), 200);
    let body: AskResponse = resp.json().await.unwrap();
    assert!(body.answer.text.contains("Museum of Pop Culture"), "{}", body.answer.text);
    assert!(body.error.is_none());
    assert_eq!(body.question.text, "Hello, where am I?");

    let info: SessionInfo = srv.get(&format!("/sessions/{id}")).await.json().await.unwrap();
    assert_eq!(info.chat_history.len(), 2);
    assert_eq!(info.chat_history[1], body.answer);
}

struct FailingProvider;

impl Provider for FailingProvider {
    fn respond(&self, _: &PromptBundle, _: &SessionGeometry<'_>) -> Result<String, ProviderError> {
        Err(ProviderError::Network("connection refused".into()))
    }
}

#[tokio::test]
async fn provider_failure_is_502_with_fallback_text() {
    let srv = TestServer::with_provider(Arc::new(FailingProvider), |_| {}).await;
    let ds = srv.seattle().await;
    let s = srv.session(&ds.dataset_id).await;
    let id = &s.session_id;
    let resp = srv.post(&format!("/sessions/{id}/ask"), json!({"question": "Where am I?"})).await;
    assert_eq!(resp.status(), 502);
    let body: AskResponse = resp.json().await.unwrap();
    assert_eq!(body.answer.text, FALLBACK_REPLY);
    assert!(body.answer.is_error);
    assert!(body.error.unwrap().contains("connection refused"));
    // The failed exchange stays in history and the session stays usable.
    let info: SessionInfo = srv.get(&format!("/sessions/{id}")).await.json().await.unwrap();
    assert_eq!(info.chat_history.len(), 2);
    assert_eq!(srv.post(&format!("/sessions/{id}/cursor"), json!({"x": 2, "y": 2})).await.status(), 200);
}

#[tokio::test]
async fn second_ask_while_pending_is_409() {
    let srv = TestServer::with_mock_delay(Duration::from_millis(800)).await;
    let ds = srv.seattle().await;
    let s = srv.session(&ds.dataset_id).await;
    let path = format!("/sessions/{}/ask", s.session_id);
    let first = srv.post(&path, json!({"question": "Where am I?"}));
    let second = async {
        tokio::time::sleep(Duration::from_millis(200)).await;
        srv.post(&path, json!({"question": "What is around me?"})).await
    };
    let (a, b) = tokio::join!(first, second);
    assert_eq!(a.status(), 200);
    assert_eq!(b.status(), 409);
    let err: ErrorBody = b.json().await.unwrap();
    assert_eq!(err.error, "conflict");
    // Released afterwards.
    assert_eq!(srv.post(&path, json!({"question": "Where am I?"})).await.status(), 200);
    // Another session is unaffected by this one's ask.
    let other = srv.session(&ds.dataset_id).await;
    let other_path = format!("/sessions/{}/ask", other.session_id);
    let (a, b) = tokio::join!(
        srv.post(&path, json!({"question": "Where am I?"})),
        srv.post(&other_path, json!({"question": "Where am I?"}))
    );
    assert_eq!((a.status().as_u16(), b.status().as_u16()), (200, 200));
}

#[tokio::test]
async fn cors_headers_follow_config() {
    let srv = TestServer::start().await;
    let resp = srv
        .http
        .get(srv.url("/health"))
        .header("origin", "http://localhost:5173")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");

    let pinned = TestServer::with_provider(Arc::new(hapticmap_core::agent::MockGroundedProvider::default()), |c| {
        c.cors_origin = Some("http://ui.test".into())
    })
    .await;
    let preflight = pinned
        .http
        .request(reqwest::Method::OPTIONS, pinned.url("/sessions"))
        .header("origin", "http://ui.test")
        .header("access-control-request-method", "POST")
        .header("access-control-request-headers", "content-type")
        .send()
        .await
        .unwrap();
    assert!(preflight.status().is_success());
    assert_eq!(preflight.headers()["access-control-allow-origin"], "http://ui.test");
    let foreign = pinned
        .http
        .get(pinned.url("/health"))
        .header("origin", "http://evil.test")
        .send()
        .await
        .unwrap();
    assert!(foreign.headers().get("access-control-allow-origin").is_none());
}

#[tokio::test]
async fn uploaded_dataset_opens_sessions() {
    let srv = TestServer::start().await;
    let ds = dataset_of(
        SEATTLE_CENTER,
        400.0,
        vec![rect_zone("way/1", "Block", ZoneCategory::Building, SEATTLE_CENTER, (0.0, 0.0), (40.0, 40.0))],
    );
    let resp = srv.http.post(srv.url("/datasets")).json(&ds).send().await.unwrap();
    assert_eq!(resp.status(), 201);
    let summary: DatasetSummary = resp.json().await.unwrap();
    assert!(summary.dataset_id.starts_with("upload-"));
    let s = srv.session(&summary.dataset_id).await;
    assert_eq!(srv.zone_at(&s.session_id, 400.0, 400.0).await.as_deref(), Some("way/1"));

    let mut dup = ds.clone();
    dup.zones.push(dup.zones[0].clone());
    let resp = srv.http.post(srv.url("/datasets")).json(&dup).send().await.unwrap();
    assert_eq!(resp.status(), 422);
}

#[tokio::test]
async fn empty_dataset_session_still_works() {
    let srv = TestServer::start().await;
    let ds = dataset_of(SEATTLE_CENTER, 400.0, vec![]);
    let summary: DatasetSummary = srv.http.post(srv.url("/datasets")).json(&ds).send().await.unwrap().json().await.unwrap();
    let s = srv.session(&summary.dataset_id).await;
    let resp = srv.get(&format!("/sessions/{}/screenshot", s.session_id)).await;
    assert_eq!(resp.status(), 200);
    let resp = srv.post(&format!("/sessions/{}/ask", s.session_id), json!({"question": "Where am I?"})).await;
    assert_eq!(resp.status(), 200);
}

#[tokio::test]
async fn schema_endpoint_serves_the_published_schema() {
    let srv = TestServer::start().await;
    let resp = srv.get("/schema/feedback_event").await;
    assert_eq!(resp.headers()["content-type"], "application/schema+json");
    let served: Value = resp.json().await.unwrap();
    let published: Value = serde_json::from_str(hapticmap_server::FEEDBACK_EVENT_SCHEMA).unwrap();
    assert_eq!(served, published);
}
