//! HTTP and WebSocket service over the haptic map engine.
//!
//! Plain HTTP carries places, sessions, screenshots and asks. Cursor frames
//! and feedback events travel on one WebSocket per session at
//! `/sessions/{id}/stream`.

pub mod config;
pub mod error;
mod routes;
pub mod schema;
pub mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::http::HeaderValue;
use axum::routing::{get, post};
use axum::Router;
use hapticmap_core::agent::Provider;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::trace::TraceLayer;
use tracing::info;

pub use config::{ServerConfig, ServerConfigError};
pub use schema::FEEDBACK_EVENT_SCHEMA;
pub use state::AppState;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ServerConfigError),
    #[error("invalid CORS origin {0:?}")]
    CorsOrigin(String),
    #[error("binding {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn cors(origin: Option<&str>) -> Result<CorsLayer, ServeError> {
    let allow = match origin {
        None | Some("*") => AllowOrigin::any(),
        Some(o) => AllowOrigin::list([HeaderValue::from_str(o).map_err(|_| ServeError::CorsOrigin(o.to_string()))?]),
    };
    Ok(CorsLayer::new().allow_origin(allow).allow_methods(Any).allow_headers(Any))
}

pub fn router(state: AppState) -> Result<Router, ServeError> {
    let cors = cors(state.config().cors_origin.as_deref())?;
    Ok(Router::new()
        .route("/health", get(routes::health))
        .route("/schema/feedback_event", get(routes::feedback_event_schema))
        .route("/places", post(routes::create_place))
        .route("/places/{id}", get(routes::get_place))
        .route("/places/{id}/dataset", get(routes::get_place_dataset))
        .route("/datasets", post(routes::upload_dataset))
        .route("/sessions", post(routes::create_session))
        .route("/sessions/{id}", get(routes::get_session).delete(routes::delete_session))
        .route("/sessions/{id}/screenshot", get(routes::screenshot))
        .route("/sessions/{id}/layout", get(routes::layout))
        .route("/sessions/{id}/cursor", post(routes::move_cursor))
        .route("/sessions/{id}/audio", post(routes::set_audio))
        .route("/sessions/{id}/ask", post(routes::ask))
        .route("/sessions/{id}/stream", get(routes::stream))
        .layer(cors)
        .layer(TraceLayer::new_for_http())
        .with_state(state))
}

/// State with the provider named in the config.
pub fn state_from_config(config: ServerConfig) -> Result<AppState, ServeError> {
    let provider: Arc<dyn Provider> = config.provider.build().map_err(ServerConfigError::from)?;
    Ok(AppState::new(config, provider))
}

/// Serve on an already-bound listener until the future resolves.
pub async fn serve_on(
    listener: TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let app = router(state)?;
    info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

/// Bind `host:port` from the config and serve until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServeError> {
    let addr = format!("{}:{}", config.host, config.port);
    let state = state_from_config(config)?;
    let listener = TcpListener::bind(&addr)
        .await
        .map_err(|source| ServeError::Bind { addr: addr.clone(), source })?;
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

/// Bind an ephemeral local port and serve in the background. Used by
/// tests and by the CLI when it needs an in-process server.
pub async fn spawn_local(state: AppState) -> Result<(SocketAddr, tokio::task::JoinHandle<()>), ServeError> {
    let listener = TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    let app = router(state)?;
    let handle = tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });
    Ok((addr, handle))
}
