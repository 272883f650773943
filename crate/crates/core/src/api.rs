//! Request and response bodies shared by the HTTP service and its client.

use serde::{Deserialize, Serialize};

use crate::agent::{ChatTurn, ProviderKind};
use crate::context::SpatialLayout;
use crate::exploration::{ExplorationSession, FeedbackEvent, VisitedEntry};
use crate::geo::{CanvasPoint, GeoPoint};
use crate::ingest::{DatasetSource, ZoneCategory};
use crate::world::MapWorld;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceSource {
    Overpass,
    Fixture,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreatePlaceRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PlaceSource>,
    /// Named built-in fixture when `source` is `fixture`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(default)]
    pub refresh: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSummary {
    pub zone_id: String,
    pub name: String,
    pub category: ZoneCategory,
    pub area_m2: f64,
    pub centroid: GeoPoint,
    pub centroid_px: CanvasPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanvasMeta {
    pub width_px: u32,
    pub height_px: u32,
    pub meters_per_pixel: f64,
    pub center: GeoPoint,
}

impl CanvasMeta {
    pub fn of(world: &MapWorld) -> Self {
        let p = world.projection();
        Self {
            width_px: p.width_px,
            height_px: p.height_px,
            meters_per_pixel: p.meters_per_pixel,
            center: p.center_geo,
        }
    }
}

pub fn zone_summaries(world: &MapWorld) -> Vec<ZoneSummary> {
    world
        .zones()
        .iter()
        .zip(world.projected())
        .map(|(z, pz)| ZoneSummary {
            zone_id: z.zone_id.clone(),
            name: z.name.clone(),
            category: z.category,
            area_m2: z.area_m2,
            centroid: z.centroid,
            centroid_px: pz.canvas_centroid,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset_id: String,
    pub center: GeoPoint,
    pub radius_m: f64,
    pub source: DatasetSource,
    pub fetched_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place_query: Option<String>,
    pub zone_count: usize,
    pub canvas: CanvasMeta,
    pub zones: Vec<ZoneSummary>,
}

impl DatasetSummary {
    pub fn of(dataset_id: impl Into<String>, world: &MapWorld) -> Self {
        let ds = world.dataset();
        Self {
            dataset_id: dataset_id.into(),
            center: ds.center,
            radius_m: ds.radius_m,
            source: ds.source,
            fetched_at: ds.fetched_at.clone(),
            place_query: ds.place_query.clone(),
            zone_count: ds.zones.len(),
            canvas: CanvasMeta::of(world),
            zones: zone_summaries(world),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub dataset_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passive_audio: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub dataset_id: String,
    pub canvas: CanvasMeta,
    pub cursor: CanvasPoint,
    #[serde(default)]
    pub current_zone: Option<String>,
    pub visited: Vec<VisitedEntry>,
    pub passive_audio_enabled: bool,
    pub chat_history: Vec<ChatTurn>,
    pub created_at: String,
    pub zones: Vec<ZoneSummary>,
}

impl SessionInfo {
    pub fn of(dataset_id: impl Into<String>, session: &ExplorationSession) -> Self {
        Self {
            session_id: session.session_id().to_string(),
            dataset_id: dataset_id.into(),
            canvas: CanvasMeta::of(session.world()),
            cursor: session.cursor(),
            current_zone: session.current_zone().map(|z| z.zone_id.clone()),
            visited: session.visited().to_vec(),
            passive_audio_enabled: session.passive_audio_enabled(),
            chat_history: session.chat_history().to_vec(),
            created_at: session.created_at().to_string(),
            zones: zone_summaries(session.world()),
        }
    }
}

/// One cursor frame, over HTTP or the WebSocket stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CursorFrame {
    pub x: f64,
    pub y: f64,
}

impl From<CursorFrame> for CanvasPoint {
    fn from(f: CursorFrame) -> Self {
        CanvasPoint::new(f.x, f.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CursorResponse {
    pub cursor: CanvasPoint,
    #[serde(default)]
    pub current_zone: Option<String>,
    pub events: Vec<FeedbackEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AskRequest {
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskResponse {
    pub question: ChatTurn,
    pub answer: ChatTurn,
    /// Provider failure detail when `answer` is the fallback turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudioRequest {
    pub enabled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioResponse {
    pub passive_audio_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

/// Frames the server pushes on the stream besides feedback events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StreamNotice {
    Error { message: String },
}

/// Query parameters of the screenshot endpoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenshotParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutResponse {
    pub current_zone_line: String,
    pub neighbor_lines: Vec<String>,
    /// The block exactly as it appears in the prompt.
    pub text: String,
}

impl From<SpatialLayout> for LayoutResponse {
    fn from(l: SpatialLayout) -> Self {
        Self {
            text: l.to_text(),
            current_zone_line: l.current_zone_line,
            neighbor_lines: l.neighbor_lines,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub provider: ProviderKind,
    pub sessions: usize,
}
