use axum::extract::rejection::QueryRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use hapticmap_core::agent::{run_ask, AgentError, PromptSnapshot};
use hapticmap_core::api::{
    AskRequest, AskResponse, AudioRequest, AudioResponse, CreatePlaceRequest, CreateSessionRequest, CursorFrame,
    CursorResponse, DatasetSummary, HealthResponse, LayoutResponse, PlaceSource, ScreenshotParams, SessionInfo,
    StreamNotice,
};
use hapticmap_core::fixtures;
use hapticmap_core::ingest::{fetch_dataset, Geocoder, OverpassClient, PlaceQuery, RawFeatureSource, DEFAULT_RADIUS_M};
use hapticmap_core::render::{encode_jpeg, render_canvas, RenderStyle, DEFAULT_JPEG_QUALITY};
use hapticmap_core::{GeoPoint, ZoneDataset};
use tokio::sync::broadcast::error::RecvError;
use tracing::{debug, warn};

use crate::error::{ApiError, ApiJson};
use crate::schema::FEEDBACK_EVENT_SCHEMA;
use crate::state::{AppState, StreamItem};

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("worker task failed: {e}")))
}

pub async fn health(State(state): State<AppState>) -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".into(),
        provider: state.config().provider.provider_kind,
        sessions: state.session_count(),
    })
}

pub async fn feedback_event_schema() -> Response {
    ([(header::CONTENT_TYPE, "application/schema+json")], FEEDBACK_EVENT_SCHEMA).into_response()
}

/// Where to fetch from and what to call the result.
struct PlacePlan {
    dataset_id: String,
    source: PlaceSource,
    fixture: String,
    center: GeoPoint,
    radius_m: f64,
    label: Option<String>,
}

fn plan_place(state: &AppState, req: &CreatePlaceRequest) -> ApiResult<PlacePlan> {
    let source = req.source.unwrap_or(if req.fixture.is_some() {
        PlaceSource::Fixture
    } else {
        PlaceSource::Overpass
    });
    let fixture = req.fixture.clone().unwrap_or_else(|| fixtures::FIXTURE_NAMES[0].to_string());
    let radius_m = req.radius_m.unwrap_or(DEFAULT_RADIUS_M);
    let text = req.query.as_deref().map(str::trim).filter(|t| !t.is_empty());

    let center = match (req.lat, req.lon) {
        (Some(lat), Some(lon)) => GeoPoint::new(lat, lon),
        (None, None) => match (text, source) {
            (Some(t), PlaceSource::Fixture) => Geocoder::offline().resolve(&PlaceQuery::text(t))?,
            (Some(t), PlaceSource::Overpass) => geocoder(state).resolve(&PlaceQuery::text(t))?,
            (None, PlaceSource::Fixture) => fixtures::fixture_center(&fixture)
                .ok_or_else(|| ApiError::Unprocessable(format!("unknown fixture {fixture:?}")))?,
            (None, PlaceSource::Overpass) => {
                return Err(ApiError::Unprocessable("either query or lat and lon is required".into()))
            }
        },
        _ => return Err(ApiError::Unprocessable("lat and lon must be given together".into())),
    };
    PlaceQuery::at(center).with_radius(radius_m).validate()?;

    let key = format!("{:.4}_{:.4}_r{:.0}", center.lat, center.lon, radius_m);
    let dataset_id = match source {
        PlaceSource::Fixture => format!("fixture-{fixture}-{key}"),
        PlaceSource::Overpass => format!("overpass-{key}"),
    };
    Ok(PlacePlan {
        dataset_id,
        source,
        fixture,
        center,
        radius_m,
        label: text.map(str::to_string),
    })
}

fn geocoder(state: &AppState) -> Geocoder {
    let mut g = Geocoder::from_env();
    if let Some(url) = &state.config().nominatim_url {
        g.endpoint = url.clone();
    }
    g
}

fn fetch_plan(state: &AppState, plan: &PlacePlan, refresh: bool) -> ApiResult<ZoneDataset> {
    let source: Box<dyn RawFeatureSource> = match plan.source {
        PlaceSource::Fixture => Box::new(
            fixtures::fixture_source(&plan.fixture)
                .ok_or_else(|| ApiError::Unprocessable(format!("unknown fixture {:?}", plan.fixture)))?,
        ),
        PlaceSource::Overpass => {
            let mut client = OverpassClient::from_env();
            if let Some(url) = &state.config().overpass_url {
                client.endpoint = url.clone();
            }
            if let Some(dir) = &state.config().cache_dir {
                client = client.with_cache_dir(dir.join("overpass"));
            }
            client.refresh = refresh;
            Box::new(client)
        }
    };
    Ok(fetch_dataset(source.as_ref(), plan.center, plan.radius_m, plan.label.clone())?)
}

pub async fn create_place(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<CreatePlaceRequest>,
) -> ApiResult<Json<DatasetSummary>> {
    let summary = blocking(move || -> ApiResult<DatasetSummary> {
        let plan = plan_place(&state, &req)?;
        if !req.refresh {
            if let Ok(world) = state.dataset(&plan.dataset_id) {
                debug!(dataset_id = %plan.dataset_id, "dataset cache hit");
                return Ok(DatasetSummary::of(&plan.dataset_id, &world));
            }
        }
        let dataset = fetch_plan(&state, &plan, req.refresh)?;
        let world = state.insert_dataset(&plan.dataset_id, dataset)?;
        Ok(DatasetSummary::of(&plan.dataset_id, &world))
    })
    .await??;
    Ok(Json(summary))
}

pub async fn upload_dataset(
    State(state): State<AppState>,
    ApiJson(mut dataset): ApiJson<ZoneDataset>,
) -> ApiResult<(StatusCode, Json<DatasetSummary>)> {
    dataset.zones.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
    if dataset.zones.windows(2).any(|w| w[0].zone_id == w[1].zone_id) {
        return Err(ApiError::Unprocessable("zone ids must be unique".into()));
    }
    PlaceQuery::at(dataset.center).with_radius(dataset.radius_m).validate()?;
    let dataset_id = format!("upload-{}", uuid::Uuid::new_v4().simple());
    let summary = blocking(move || -> ApiResult<DatasetSummary> {
        let world = state.insert_dataset(&dataset_id, dataset)?;
        Ok(DatasetSummary::of(&dataset_id, &world))
    })
    .await??;
    Ok((StatusCode::CREATED, Json(summary)))
}

pub async fn get_place(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<DatasetSummary>> {
    let world = state.dataset(&id)?;
    Ok(Json(DatasetSummary::of(id, &world)))
}

pub async fn get_place_dataset(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ZoneDataset>> {
    let world = state.dataset(&id)?;
    Ok(Json(world.dataset().clone()))
}

pub async fn create_session(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<CreateSessionRequest>,
) -> ApiResult<(StatusCode, Json<SessionInfo>)> {
    let slot = state.create_session(&req.dataset_id, req.passive_audio)?;
    let info = SessionInfo::of(&slot.dataset_id, &*slot.lock()?);
    Ok((StatusCode::CREATED, Json(info)))
}

pub async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    let slot = state.session(&id)?;
    let info = SessionInfo::of(&slot.dataset_id, &*slot.lock()?);
    Ok(Json(info))
}

pub async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    state.close_session(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

pub async fn screenshot(
    State(state): State<AppState>,
    Path(id): Path<String>,
    params: Result<Query<ScreenshotParams>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(params) = params.map_err(|e| ApiError::Unprocessable(e.body_text()))?;
    let slot = state.session(&id)?;
    let (world, cursor) = {
        let s = slot.lock()?;
        (std::sync::Arc::clone(s.world()), s.cursor())
    };
    let quality = params.quality.unwrap_or(DEFAULT_JPEG_QUALITY);
    if !(1..=100).contains(&quality) {
        return Err(ApiError::Unprocessable(format!("quality {quality} outside 1..=100")));
    }
    let mut style = RenderStyle::default();
    if params.labels.unwrap_or(false) {
        style = style.with_labels();
    }
    let jpeg = blocking(move || encode_jpeg(&render_canvas(&world, Some(cursor), &style), quality))
        .await?
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/jpeg")], jpeg).into_response())
}

pub async fn layout(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<LayoutResponse>> {
    let slot = state.session(&id)?;
    let layout = slot
        .lock()?
        .describe_position()
        .map_err(|e| ApiError::Unprocessable(e.to_string()))?;
    Ok(Json(layout.into()))
}

pub async fn move_cursor(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(frame): ApiJson<CursorFrame>,
) -> ApiResult<Json<CursorResponse>> {
    let slot = state.session(&id)?;
    let (cursor, current_zone, events) = slot.move_cursor(frame.into())?;
    Ok(Json(CursorResponse {
        cursor,
        current_zone,
        events,
    }))
}

pub async fn set_audio(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<AudioRequest>,
) -> ApiResult<Json<AudioResponse>> {
    let slot = state.session(&id)?;
    let mut s = slot.lock()?;
    s.set_passive_audio(req.enabled)
        .map_err(|_| ApiError::NotFound(format!("session {id} is closed")))?;
    Ok(Json(AudioResponse {
        passive_audio_enabled: s.passive_audio_enabled(),
    }))
}

/// The provider call runs on a blocking worker without the session lock,
/// so cursor frames keep flowing while the agent thinks.
pub async fn ask(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<AskRequest>,
) -> ApiResult<Response> {
    let slot = state.session(&id)?;
    if req.question.trim().is_empty() {
        return Err(ApiError::Unprocessable("question is empty".into()));
    }
    let _in_flight = slot.begin_ask()?;
    let snapshot = PromptSnapshot::of(&*slot.lock()?).map_err(agent_error)?;
    let provider = state.provider();
    let question = req.question;
    let outcome = blocking(move || run_ask(&snapshot, &question, provider.as_ref()))
        .await?
        .map_err(agent_error)?;
    slot.lock()?
        .record_exchange(&outcome)
        .map_err(|_| ApiError::NotFound(format!("session {id} closed during the ask")))?;

    let error = outcome.provider_error.as_ref().map(|e| e.to_string());
    if let Some(e) = &error {
        warn!(session_id = %id, error = %e, "provider failed, answered with fallback");
    }
    let status = if error.is_some() {
        StatusCode::BAD_GATEWAY
    } else {
        StatusCode::OK
    };
    let body = AskResponse {
        question: outcome.user_turn,
        answer: outcome.agent_turn,
        error,
    };
    Ok((status, Json(body)).into_response())
}

fn agent_error(e: AgentError) -> ApiError {
    match e {
        AgentError::SessionClosed => ApiError::NotFound("session is closed".into()),
        AgentError::EmptyQuestion => ApiError::Unprocessable(e.to_string()),
        AgentError::Context(_) | AgentError::Render(_) => ApiError::Internal(e.to_string()),
    }
}

pub async fn stream(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> ApiResult<Response> {
    let slot = state.session(&id)?;
    drop(slot.lock()?);
    Ok(ws.on_upgrade(move |socket| run_stream(socket, slot)))
}

async fn send_json<T: serde::Serialize>(socket: &mut WebSocket, value: &T) -> bool {
    let text = serde_json::to_string(value).expect("frames serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn run_stream(mut socket: WebSocket, slot: std::sync::Arc<crate::state::SessionSlot>) {
    let mut rx = slot.subscribe();
    loop {
        tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    let notice = match serde_json::from_str::<CursorFrame>(&text) {
                        // Events come back to this socket through the broadcast.
                        Ok(frame) => slot.move_cursor(frame.into()).err().map(|e| e.to_string()),
                        Err(e) => Some(format!("bad cursor frame: {e}")),
                    };
                    if let Some(message) = notice {
                        if !send_json(&mut socket, &StreamNotice::Error { message }).await {
                            break;
                        }
                    }
                }
                Some(Ok(Message::Binary(_))) => {
                    let message = "binary frames are not supported".to_string();
                    if !send_json(&mut socket, &StreamNotice::Error { message }).await {
                        break;
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
            item = rx.recv() => match item {
                Ok(StreamItem::Event(e)) => {
                    if !send_json(&mut socket, &e).await {
                        break;
                    }
                }
                Ok(StreamItem::Closed) | Err(RecvError::Closed) => {
                    let _ = socket.send(Message::Close(None)).await;
                    break;
                }
                Err(RecvError::Lagged(n)) => {
                    let message = format!("stream lagged, {n} events dropped");
                    if !send_json(&mut socket, &StreamNotice::Error { message }).await {
                        break;
                    }
                }
            },
        }
    }
    debug!("stream ended");
}
