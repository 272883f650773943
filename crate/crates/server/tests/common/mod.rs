#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use hapticmap_core::agent::{MockGroundedProvider, Provider};
use hapticmap_core::api::{DatasetSummary, SessionInfo};
use hapticmap_core::exploration::FeedbackEvent;
use hapticmap_server::{AppState, ServerConfig};
use serde_json::{json, Value};

pub struct TestServer {
    pub addr: SocketAddr,
    pub base: String,
    pub http: reqwest::Client,
    pub cache: tempfile::TempDir,
}

impl TestServer {
    pub async fn start() -> Self {
        Self::with_provider(Arc::new(MockGroundedProvider::default()), |_| {}).await
    }

    pub async fn with_mock_delay(delay: Duration) -> Self {
        Self::with_provider(Arc::new(MockGroundedProvider::with_delay(delay)), |_| {}).await
    }

    pub async fn with_provider(provider: Arc<dyn Provider>, tweak: impl FnOnce(&mut ServerConfig)) -> Self {
        let cache = tempfile::tempdir().unwrap();
        let mut config = ServerConfig {
            cache_dir: Some(cache.path().to_path_buf()),
            // Nothing in these tests may reach the network.
            overpass_url: Some("http://127.0.0.1:9/interpreter".into()),
            nominatim_url: Some("http://127.0.0.1:9".into()),
            ..ServerConfig::default()
        };
        tweak(&mut config);
        let state = AppState::new(config, provider);
        let (addr, _handle) = hapticmap_server::spawn_local(state).await.unwrap();
        Self {
            addr,
            base: format!("http://{addr}"),
            http: reqwest::Client::new(),
            cache,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn ws_url(&self, session_id: &str) -> String {
        format!("ws://{}/sessions/{session_id}/stream", self.addr)
    }

    pub async fn post(&self, path: &str, body: Value) -> reqwest::Response {
        self.http.post(self.url(path)).json(&body).send().await.unwrap()
    }

    pub async fn get(&self, path: &str) -> reqwest::Response {
        self.http.get(self.url(path)).send().await.unwrap()
    }

    pub async fn seattle(&self) -> DatasetSummary {
        let resp = self.post("/places", json!({"source": "fixture", "fixture": "seattle_center"})).await;
        assert_eq!(resp.status(), 200);
        resp.json().await.unwrap()
    }

    pub async fn session(&self, dataset_id: &str) -> SessionInfo {
        let resp = self.post("/sessions", json!({ "dataset_id": dataset_id })).await;
        assert_eq!(resp.status(), 201);
        resp.json().await.unwrap()
    }

    /// Move the cursor over HTTP and return the zone under it.
    pub async fn zone_at(&self, session_id: &str, x: f64, y: f64) -> Option<String> {
        let resp = self
            .post(&format!("/sessions/{session_id}/cursor"), json!({"x": x, "y": y}))
            .await;
        assert_eq!(resp.status(), 200);
        let body: Value = resp.json().await.unwrap();
        body["current_zone"].as_str().map(str::to_string)
    }

    /// A canvas point that lies inside the named zone, found through the
    /// service itself on a scratch session.
    pub async fn point_inside(&self, dataset: &DatasetSummary, name: &str) -> (String, f64, f64) {
        let zone = dataset.zones.iter().find(|z| z.name == name).expect("zone present");
        let scratch = self.session(&dataset.dataset_id).await;
        let c = zone.centroid_px;
        for (dx, dy) in [(0.0, 0.0), (3.0, 0.0), (-3.0, 0.0), (0.0, 3.0), (0.0, -3.0)] {
            if self.zone_at(&scratch.session_id, c.x + dx, c.y + dy).await.as_deref() == Some(zone.zone_id.as_str()) {
                return (zone.zone_id.clone(), c.x + dx, c.y + dy);
            }
        }
        panic!("no interior point found for {name}");
    }
}

pub fn schema_validator() -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(hapticmap_server::FEEDBACK_EVENT_SCHEMA).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

pub fn assert_valid_event(validator: &jsonschema::Validator, frame: &Value) {
    let errors: Vec<String> = validator.iter_errors(frame).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "frame {frame} violates schema: {errors:?}");
    serde_json::from_value::<FeedbackEvent>(frame.clone()).expect("frame decodes as FeedbackEvent");
}
