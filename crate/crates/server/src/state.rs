use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use hapticmap_core::agent::Provider;
use hapticmap_core::exploration::{ExplorationSession, FeedbackEvent};
use hapticmap_core::{CanvasPoint, MapWorld, ZoneDataset};
use tokio::sync::broadcast;
use tracing::{info, warn};

use crate::config::ServerConfig;
use crate::error::ApiError;

/// Frames fanned out to every stream attached to a session.
#[derive(Debug, Clone)]
pub enum StreamItem {
    Event(FeedbackEvent),
    Closed,
}

const STREAM_BUFFER: usize = 1024;

pub struct SessionSlot {
    pub dataset_id: String,
    session: Mutex<ExplorationSession>,
    ask_in_flight: AtomicBool,
    events: broadcast::Sender<StreamItem>,
}

impl SessionSlot {
    fn new(dataset_id: String, session: ExplorationSession) -> Self {
        let (events, _) = broadcast::channel(STREAM_BUFFER);
        Self {
            dataset_id,
            session: Mutex::new(session),
            ask_in_flight: AtomicBool::new(false),
            events,
        }
    }

    /// The session, or 404 once it has been closed.
    pub fn lock(&self) -> Result<MutexGuard<'_, ExplorationSession>, ApiError> {
        let guard = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_closed() {
            return Err(ApiError::NotFound(format!("session {} is closed", guard.session_id())));
        }
        Ok(guard)
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StreamItem> {
        self.events.subscribe()
    }

    /// Move the cursor and fan the events out. Broadcasting under the
    /// session lock keeps every subscriber's view in cursor order.
    pub fn move_cursor(&self, p: CanvasPoint) -> Result<(CanvasPoint, Option<String>, Vec<FeedbackEvent>), ApiError> {
        let mut session = self.lock()?;
        let events = session
            .move_cursor(p)
            .map_err(|_| ApiError::NotFound("session is closed".into()))?;
        for e in &events {
            // No receivers is fine; HTTP-only clients never subscribe.
            let _ = self.events.send(StreamItem::Event(e.clone()));
        }
        let zone = session.current_zone().map(|z| z.zone_id.clone());
        Ok((session.cursor(), zone, events))
    }

    /// Claim the single ask slot; the guard releases it on drop.
    pub fn begin_ask(self: &Arc<Self>) -> Result<AskGuard, ApiError> {
        if self.ask_in_flight.swap(true, Ordering::AcqRel) {
            return Err(ApiError::Conflict("an ask is already in flight for this session".into()));
        }
        Ok(AskGuard(Arc::clone(self)))
    }

    fn close(&self) {
        let mut guard = self.session.lock().unwrap_or_else(|p| p.into_inner());
        guard.close();
        let _ = self.events.send(StreamItem::Closed);
    }
}

pub struct AskGuard(Arc<SessionSlot>);

impl Drop for AskGuard {
    fn drop(&mut self) {
        self.0.ask_in_flight.store(false, Ordering::Release);
    }
}

struct Inner {
    config: ServerConfig,
    provider: Arc<dyn Provider>,
    datasets: RwLock<HashMap<String, Arc<MapWorld>>>,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
}

/// Shared service state: loaded datasets (read-only, shared by sessions)
/// and the session registry.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(config: ServerConfig, provider: Arc<dyn Provider>) -> Self {
        Self {
            inner: Arc::new(Inner {
                config,
                provider,
                datasets: RwLock::new(HashMap::new()),
                sessions: RwLock::new(HashMap::new()),
            }),
        }
    }

    pub fn config(&self) -> &ServerConfig {
        &self.inner.config
    }

    pub fn provider(&self) -> Arc<dyn Provider> {
        Arc::clone(&self.inner.provider)
    }

    fn dataset_path(&self, dataset_id: &str) -> Option<PathBuf> {
        self.inner
            .config
            .cache_dir
            .as_ref()
            .map(|d| d.join("datasets").join(format!("{dataset_id}.json")))
    }

    /// Cached dataset on disk, if caching is enabled and the file exists.
    pub fn cached_dataset(&self, dataset_id: &str) -> Option<ZoneDataset> {
        let path = self.dataset_path(dataset_id)?;
        let text = std::fs::read_to_string(&path).ok()?;
        match ZoneDataset::from_json(&text) {
            Ok(ds) => Some(ds),
            Err(e) => {
                warn!(path = %path.display(), error = %e, "ignoring unreadable cached dataset");
                None
            }
        }
    }

    /// Register a dataset in memory and write it through to the cache.
    pub fn insert_dataset(&self, dataset_id: &str, dataset: ZoneDataset) -> Result<Arc<MapWorld>, ApiError> {
        if let Some(path) = self.dataset_path(dataset_id) {
            let write = || -> std::io::Result<()> {
                std::fs::create_dir_all(path.parent().expect("dataset path has a parent"))?;
                std::fs::write(&path, dataset.to_json())
            };
            write().map_err(|e| ApiError::Internal(format!("writing dataset cache: {e}")))?;
        }
        let world = Arc::new(MapWorld::new(dataset));
        info!(dataset_id, zones = world.zones().len(), "dataset loaded");
        self.inner
            .datasets
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(dataset_id.to_string(), Arc::clone(&world));
        Ok(world)
    }

    /// In-memory dataset, falling back to the disk cache.
    pub fn dataset(&self, dataset_id: &str) -> Result<Arc<MapWorld>, ApiError> {
        if let Some(w) = self.inner.datasets.read().unwrap_or_else(|p| p.into_inner()).get(dataset_id) {
            return Ok(Arc::clone(w));
        }
        let valid_id = !dataset_id.is_empty()
            && dataset_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !dataset_id.starts_with('.');
        if valid_id {
            if let Some(ds) = self.cached_dataset(dataset_id) {
                let world = Arc::new(MapWorld::new(ds));
                self.inner
                    .datasets
                    .write()
                    .unwrap_or_else(|p| p.into_inner())
                    .insert(dataset_id.to_string(), Arc::clone(&world));
                return Ok(world);
            }
        }
        Err(ApiError::NotFound(format!("unknown dataset {dataset_id}")))
    }

    pub fn create_session(&self, dataset_id: &str, passive_audio: Option<bool>) -> Result<Arc<SessionSlot>, ApiError> {
        let world = self.dataset(dataset_id)?;
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let mut session = ExplorationSession::new(session_id.clone(), world);
        if let Some(enabled) = passive_audio {
            session
                .set_passive_audio(enabled)
                .expect("fresh session is open");
        }
        let slot = Arc::new(SessionSlot::new(dataset_id.to_string(), session));
        self.inner
            .sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(session_id.clone(), Arc::clone(&slot));
        info!(%session_id, dataset_id, "session opened");
        Ok(slot)
    }

    pub fn session(&self, session_id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        self.inner
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(session_id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown session {session_id}")))
    }

    /// Close and evict. Attached streams receive a final close frame.
    pub fn close_session(&self, session_id: &str) -> Result<(), ApiError> {
        let slot = self
            .inner
            .sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .remove(session_id)
            .ok_or_else(|| ApiError::NotFound(format!("unknown session {session_id}")))?;
        slot.close();
        info!(%session_id, "session closed");
        Ok(())
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.read().unwrap_or_else(|p| p.into_inner()).len()
    }
}
