//! Thin async client for the hapticmap service. Every method maps to one
//! endpoint and returns the shared request/response types.

use futures::{SinkExt, StreamExt};
use hapticmap_core::api::{
    AskRequest, AskResponse, AudioRequest, AudioResponse, CreatePlaceRequest, CreateSessionRequest, CursorFrame,
    CursorResponse, DatasetSummary, ErrorBody, HealthResponse, LayoutResponse, ScreenshotParams, SessionInfo,
    StreamNotice,
};
use hapticmap_core::exploration::FeedbackEvent;
use hapticmap_core::ZoneDataset;
use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use tokio_tungstenite::tungstenite::Message;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("server answered {status}: {}", .body.as_ref().map(|b| b.message.as_str()).unwrap_or("no detail"))]
    Http { status: u16, body: Option<ErrorBody> },
    #[error("transport: {0}")]
    Transport(String),
    #[error("decoding response: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Http { status, .. } => Some(*status),
            _ => None,
        }
    }
}

impl From<reqwest::Error> for ClientError {
    fn from(e: reqwest::Error) -> Self {
        if e.is_decode() {
            ClientError::Decode(e.to_string())
        } else {
            ClientError::Transport(e.to_string())
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base_url` like `http://127.0.0.1:8787`; a trailing slash is ignored.
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base: base_url.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn send(&self, req: reqwest::RequestBuilder) -> Result<reqwest::Response, ClientError> {
        let resp = req.send().await?;
        if resp.status().is_success() {
            return Ok(resp);
        }
        let status = resp.status().as_u16();
        let body = resp.json::<ErrorBody>().await.ok();
        Err(ClientError::Http { status, body })
    }

    async fn call<B: Serialize, T: DeserializeOwned>(
        &self,
        method: Method,
        path: &str,
        body: Option<&B>,
    ) -> Result<T, ClientError> {
        let mut req = self.http.request(method, self.url(path));
        if let Some(b) = body {
            req = req.json(b);
        }
        Ok(self.send(req).await?.json().await?)
    }

    pub async fn health(&self) -> Result<HealthResponse, ClientError> {
        self.call::<(), _>(Method::GET, "/health", None).await
    }

    pub async fn feedback_event_schema(&self) -> Result<serde_json::Value, ClientError> {
        self.call::<(), _>(Method::GET, "/schema/feedback_event", None).await
    }

    pub async fn create_place(&self, req: &CreatePlaceRequest) -> Result<DatasetSummary, ClientError> {
        self.call(Method::POST, "/places", Some(req)).await
    }

    pub async fn place(&self, dataset_id: &str) -> Result<DatasetSummary, ClientError> {
        self.call::<(), _>(Method::GET, &format!("/places/{dataset_id}"), None).await
    }

    pub async fn dataset(&self, dataset_id: &str) -> Result<ZoneDataset, ClientError> {
        self.call::<(), _>(Method::GET, &format!("/places/{dataset_id}/dataset"), None).await
    }

    pub async fn upload_dataset(&self, dataset: &ZoneDataset) -> Result<DatasetSummary, ClientError> {
        self.call(Method::POST, "/datasets", Some(dataset)).await
    }

    pub async fn create_session(&self, dataset_id: &str, passive_audio: Option<bool>) -> Result<SessionInfo, ClientError> {
        let req = CreateSessionRequest {
            dataset_id: dataset_id.to_string(),
            passive_audio,
        };
        self.call(Method::POST, "/sessions", Some(&req)).await
    }

    pub async fn session(&self, session_id: &str) -> Result<SessionInfo, ClientError> {
        self.call::<(), _>(Method::GET, &format!("/sessions/{session_id}"), None).await
    }

    pub async fn close_session(&self, session_id: &str) -> Result<(), ClientError> {
        self.send(self.http.delete(self.url(&format!("/sessions/{session_id}"))))
            .await?;
        Ok(())
    }

    pub async fn move_cursor(&self, session_id: &str, x: f64, y: f64) -> Result<CursorResponse, ClientError> {
        let frame = CursorFrame { x, y };
        self.call(Method::POST, &format!("/sessions/{session_id}/cursor"), Some(&frame))
            .await
    }

    pub async fn set_audio(&self, session_id: &str, enabled: bool) -> Result<AudioResponse, ClientError> {
        self.call(
            Method::POST,
            &format!("/sessions/{session_id}/audio"),
            Some(&AudioRequest { enabled }),
        )
        .await
    }

    pub async fn layout(&self, session_id: &str) -> Result<LayoutResponse, ClientError> {
        self.call::<(), _>(Method::GET, &format!("/sessions/{session_id}/layout"), None)
            .await
    }

    /// JPEG bytes of the canvas with the cursor marker.
    pub async fn screenshot(&self, session_id: &str, params: ScreenshotParams) -> Result<Vec<u8>, ClientError> {
        let req = self
            .http
            .get(self.url(&format!("/sessions/{session_id}/screenshot")))
            .query(&params);
        Ok(self.send(req).await?.bytes().await?.to_vec())
    }

    /// A provider failure (502) still carries the fallback answer, so it is
    /// returned as `Ok` with `error` set.
    pub async fn ask(&self, session_id: &str, question: &str) -> Result<AskResponse, ClientError> {
        let resp = self
            .http
            .post(self.url(&format!("/sessions/{session_id}/ask")))
            .json(&AskRequest {
                question: question.to_string(),
            })
            .send()
            .await?;
        match resp.status() {
            s if s.is_success() || s == StatusCode::BAD_GATEWAY => Ok(resp.json().await?),
            s => Err(ClientError::Http {
                status: s.as_u16(),
                body: resp.json::<ErrorBody>().await.ok(),
            }),
        }
    }

    pub async fn stream(&self, session_id: &str) -> Result<EventStream, ClientError> {
        let ws_base = if let Some(rest) = self.base.strip_prefix("https://") {
            format!("wss://{rest}")
        } else if let Some(rest) = self.base.strip_prefix("http://") {
            format!("ws://{rest}")
        } else {
            self.base.clone()
        };
        let url = format!("{ws_base}/sessions/{session_id}/stream");
        let (socket, _) = tokio_tungstenite::connect_async(url).await.map_err(|e| match e {
            tokio_tungstenite::tungstenite::Error::Http(resp) => ClientError::Http {
                status: resp.status().as_u16(),
                body: resp
                    .body()
                    .as_ref()
                    .and_then(|b| serde_json::from_slice::<ErrorBody>(b).ok()),
            },
            other => ClientError::Transport(other.to_string()),
        })?;
        Ok(EventStream { socket })
    }
}

/// What the server pushed on the stream.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamFrame {
    Event(FeedbackEvent),
    Notice(StreamNotice),
    /// The session was closed or the server hung up.
    Closed,
}

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

pub struct EventStream {
    socket: Socket,
}

impl EventStream {
    pub async fn send_cursor(&mut self, x: f64, y: f64) -> Result<(), ClientError> {
        let text = serde_json::to_string(&CursorFrame { x, y }).expect("frame serializes");
        self.send_text(text).await
    }

    /// Raw text frame, for exercising the server's input validation.
    pub async fn send_text(&mut self, text: String) -> Result<(), ClientError> {
        self.socket
            .send(Message::Text(text.into()))
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))
    }

    pub async fn next_frame(&mut self) -> Result<StreamFrame, ClientError> {
        loop {
            match self.socket.next().await {
                None | Some(Ok(Message::Close(_))) => return Ok(StreamFrame::Closed),
                Some(Err(e)) => return Err(ClientError::Transport(e.to_string())),
                Some(Ok(Message::Text(text))) => return parse_frame(&text),
                Some(Ok(_)) => continue,
            }
        }
    }

    /// Next feedback event, skipping notices. `None` once closed.
    pub async fn next_event(&mut self) -> Result<Option<FeedbackEvent>, ClientError> {
        loop {
            match self.next_frame().await? {
                StreamFrame::Event(e) => return Ok(Some(e)),
                StreamFrame::Notice(_) => continue,
                StreamFrame::Closed => return Ok(None),
            }
        }
    }

    pub async fn close(mut self) -> Result<(), ClientError> {
        self.socket
            .close(None)
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))
    }
}

fn parse_frame(text: &str) -> Result<StreamFrame, ClientError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ClientError::Decode(e.to_string()))?;
    let decode = |e: serde_json::Error| ClientError::Decode(format!("{e}: {text}"));
    if value.get("type").is_some() {
        serde_json::from_value(value).map(StreamFrame::Notice).map_err(decode)
    } else {
        serde_json::from_value(value).map(StreamFrame::Event).map_err(decode)
    }
}
