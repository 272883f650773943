//! Prompt assembly, provider dispatch and the geometry-grounded mock.
//!
//! A prompt has four parts: the screenshot, the visited-location log, the
//! egocentric layout, and up to twenty prior chat turns. The wire encoding
//! is a vendor-neutral chat-completions shape with one inline JPEG part.

use std::sync::Arc;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tracing::{debug, warn};

use crate::context::{
    current_zone_line, describe_position, egocentric_sentence, relative_position, ContextError, RoundedDistance,
    SpatialLayout,
};
use crate::exploration::{ExplorationSession, SessionError};
use crate::geo::{CanvasPoint, GeometryError, Sector};
use crate::ingest::{Zone, ZoneCategory};
use crate::render::{encode_jpeg, render_canvas, RenderError, RenderStyle, DEFAULT_JPEG_QUALITY};
use crate::world::MapWorld;

/// Prior turns carried into each prompt.
pub const CHAT_WINDOW: usize = 20;

/// Bumped whenever [`SYSTEM_INSTRUCTION`] changes; golden prompts pin it.
pub const SYSTEM_INSTRUCTION_VERSION: &str = "guide-2";

pub const SYSTEM_INSTRUCTION: &str = "You are a guide helping a blind user explore a haptic map. \
The user moves one finger over a touch surface; each message gives you a screenshot of the map with \
the finger marked by a red star, the places the user has already touched, the zone under the finger, \
and the nearest zones with direction and distance. \
Rules: \
1. Speak egocentrically from the finger position, for example \"to your northeast, about 50 meters away\". \
Never use screen words like up, down, left or right. \
2. Take directions and distances from the listed layout, not from the picture. \
3. Answer in one or two short sentences that work well when read aloud. \
4. If a place is not on the map, say so plainly. \
5. When asked for a route, name the direction to move the finger.";

pub const FALLBACK_REPLY: &str = "Sorry, I could not get an answer right now. Please try asking again.";

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("session is closed")]
    SessionClosed,
    #[error("question is empty")]
    EmptyQuestion,
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Render(#[from] RenderError),
}

impl From<SessionError> for AgentError {
    fn from(_: SessionError) -> Self {
        AgentError::SessionClosed
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider timed out")]
    Timeout,
    #[error("provider rejected the request: {0}")]
    Rejected(String),
    #[error("network failure: {0}")]
    Network(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub speaker: Speaker,
    pub text: String,
    /// Milliseconds since session start.
    pub at_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cursor_at_ask: Option<CanvasPoint>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_error: bool,
}

impl ChatTurn {
    pub fn user(text: impl Into<String>, at_ms: u64, cursor: CanvasPoint) -> Self {
        Self {
            speaker: Speaker::User,
            text: text.into(),
            at_ms,
            cursor_at_ask: Some(cursor),
            is_error: false,
        }
    }

    pub fn agent(text: impl Into<String>, at_ms: u64) -> Self {
        Self {
            speaker: Speaker::Agent,
            text: text.into(),
            at_ms,
            cursor_at_ask: None,
            is_error: false,
        }
    }

    pub fn fallback(at_ms: u64) -> Self {
        Self {
            is_error: true,
            ..Self::agent(FALLBACK_REPLY, at_ms)
        }
    }
}

/// The last `min(CHAT_WINDOW, n)` turns, in order.
pub fn chat_window(history: &[ChatTurn]) -> &[ChatTurn] {
    &history[history.len().saturating_sub(CHAT_WINDOW)..]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_instruction: String,
    pub chat_log: Vec<ChatTurn>,
    pub visited_locations: String,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "jpeg_b64")]
    pub screenshot_jpeg: Option<Vec<u8>>,
    pub current_zone_line: String,
    pub spatial_layout: SpatialLayout,
    pub user_question: String,
}

mod jpeg_b64 {
    use base64::Engine as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(bytes) => s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(bytes)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        let text: Option<String> = Option::deserialize(d)?;
        text.map(|t| {
            base64::engine::general_purpose::STANDARD
                .decode(t)
                .map_err(serde::de::Error::custom)
        })
        .transpose()
    }
}

impl PromptBundle {
    /// Canonical request body. serde_json orders object keys, so equal
    /// bundles always serialize to equal bytes.
    pub fn to_wire(&self, model: &str) -> Value {
        let text = |t: &str| json!({"type": "text", "text": t});
        let mut messages = vec![json!({"role": "system", "content": [text(&self.system_instruction)]})];
        for turn in &self.chat_log {
            let role = match turn.speaker {
                Speaker::User => "user",
                Speaker::Agent => "assistant",
            };
            messages.push(json!({"role": role, "content": [text(&turn.text)]}));
        }
        let mut parts = vec![text(&format!("Visited locations: {}", self.visited_locations))];
        if let Some(jpeg) = &self.screenshot_jpeg {
            parts.push(json!({
                "type": "image_jpeg_base64",
                "data": base64::engine::general_purpose::STANDARD.encode(jpeg),
            }));
        }
        parts.push(text(&self.spatial_layout.to_text()));
        parts.push(text(&format!("User question: {}", self.user_question)));
        messages.push(json!({"role": "user", "content": parts}));
        json!({"model": model, "messages": messages})
    }

    pub fn to_wire_string(&self, model: &str) -> String {
        self.to_wire(model).to_string()
    }
}

/// Geometry the mock answers from: the world and the cursor at ask time.
#[derive(Debug, Clone, Copy)]
pub struct SessionGeometry<'a> {
    pub world: &'a MapWorld,
    pub cursor: CanvasPoint,
}

pub trait Provider: Send + Sync {
    fn respond(&self, bundle: &PromptBundle, geometry: &SessionGeometry<'_>) -> Result<String, ProviderError>;

    fn needs_screenshot(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    MockGrounded,
    RemoteTextMediated,
    /// Reserved; no implementation.
    VoiceStreaming,
}

impl std::str::FromStr for ProviderKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "mock_grounded" | "mock" => Ok(ProviderKind::MockGrounded),
            "remote_text_mediated" | "remote" => Ok(ProviderKind::RemoteTextMediated),
            "voice_streaming" => Ok(ProviderKind::VoiceStreaming),
            other => Err(ConfigError::UnknownProvider(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown provider kind {0:?}")]
    UnknownProvider(String),
    #[error("remote provider needs {0}")]
    Missing(&'static str),
    #[error("provider kind {0:?} is not implemented")]
    Unsupported(ProviderKind),
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub provider_kind: ProviderKind,
    pub endpoint: String,
    pub model_name: String,
    pub api_key: String,
    pub timeout_ms: u64,
    /// Extra attempts after a timeout or network failure.
    pub retries: u32,
    /// Artificial latency for the mock, used to exercise concurrency.
    pub mock_delay_ms: u64,
    /// Send prompts without the screenshot (text-only remote models).
    pub text_only: bool,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            provider_kind: ProviderKind::MockGrounded,
            endpoint: String::new(),
            model_name: "mock-grounded".into(),
            api_key: String::new(),
            timeout_ms: 10_000,
            retries: 1,
            mock_delay_ms: 0,
            text_only: false,
        }
    }
}

impl std::fmt::Debug for ProviderConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProviderConfig")
            .field("provider_kind", &self.provider_kind)
            .field("endpoint", &self.endpoint)
            .field("model_name", &self.model_name)
            .field("api_key", &if self.api_key.is_empty() { "" } else { "<redacted>" })
            .field("timeout_ms", &self.timeout_ms)
            .field("retries", &self.retries)
            .finish_non_exhaustive()
    }
}

impl ProviderConfig {
    pub fn mock() -> Self {
        Self::default()
    }

    /// Overlay `AGENT_PROVIDER`, `AGENT_ENDPOINT`, `AGENT_MODEL`, `AGENT_API_KEY`.
    pub fn apply_env(mut self) -> Result<Self, ConfigError> {
        if let Ok(kind) = std::env::var("AGENT_PROVIDER") {
            if !kind.trim().is_empty() {
                self.provider_kind = kind.parse()?;
            }
        }
        if let Ok(v) = std::env::var("AGENT_ENDPOINT") {
            self.endpoint = v;
        }
        if let Ok(v) = std::env::var("AGENT_MODEL") {
            self.model_name = v;
        }
        if let Ok(v) = std::env::var("AGENT_API_KEY") {
            self.api_key = v;
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.provider_kind {
            ProviderKind::MockGrounded => Ok(()),
            ProviderKind::VoiceStreaming => Err(ConfigError::Unsupported(ProviderKind::VoiceStreaming)),
            ProviderKind::RemoteTextMediated => {
                if self.endpoint.trim().is_empty() {
                    Err(ConfigError::Missing("an endpoint"))
                } else if self.api_key.trim().is_empty() {
                    Err(ConfigError::Missing("an api key"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Provider>, ConfigError> {
        self.validate()?;
        Ok(match self.provider_kind {
            ProviderKind::MockGrounded => Arc::new(MockGroundedProvider {
                delay: Duration::from_millis(self.mock_delay_ms),
            }),
            ProviderKind::RemoteTextMediated => Arc::new(RemoteProvider::new(self.clone())),
            ProviderKind::VoiceStreaming => unreachable!("rejected by validate"),
        })
    }
}

/// Deterministic answers computed from geometry only.
#[derive(Debug, Clone, Default)]
pub struct MockGroundedProvider {
    pub delay: Duration,
}

impl MockGroundedProvider {
    pub fn with_delay(delay: Duration) -> Self {
        Self { delay }
    }
}

impl Provider for MockGroundedProvider {
    fn respond(&self, bundle: &PromptBundle, geometry: &SessionGeometry<'_>) -> Result<String, ProviderError> {
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        Ok(mock_respond(bundle, geometry))
    }
}

/// Generic JSON chat endpoint: POST the wire body, read `{"text": ...}`.
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    config: ProviderConfig,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(config: ProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn attempt(&self, body: &str) -> Result<String, ProviderError> {
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .content_type("application/json")
            .send(body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => ProviderError::Timeout,
                other => ProviderError::Network(other.to_string()),
            })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => ProviderError::Timeout,
            other => ProviderError::Network(other.to_string()),
        })?;
        if status >= 500 {
            return Err(ProviderError::Network(format!("HTTP {status}")));
        }
        if status != 200 {
            return Err(ProviderError::Rejected(format!("HTTP {status}")));
        }
        let parsed: Value = serde_json::from_str(&text).map_err(|e| ProviderError::Rejected(e.to_string()))?;
        match parsed.get("text").and_then(Value::as_str) {
            Some(t) if !t.trim().is_empty() => Ok(t.trim().to_string()),
            _ => Err(ProviderError::Rejected("response has no text".into())),
        }
    }
}

impl Provider for RemoteProvider {
    fn respond(&self, bundle: &PromptBundle, _: &SessionGeometry<'_>) -> Result<String, ProviderError> {
        let body = bundle.to_wire_string(&self.config.model_name);
        let mut last = ProviderError::Timeout;
        for attempt in 0..=self.config.retries {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(ProviderError::Rejected(msg)) => return Err(ProviderError::Rejected(msg)),
                Err(e) => {
                    warn!(attempt, error = %e, "provider call failed");
                    last = e;
                }
            }
        }
        Err(last)
    }

    fn needs_screenshot(&self) -> bool {
        !self.config.text_only
    }
}

/// Everything a prompt needs, copied out of a session so the expensive
/// render and the provider call can run without holding the session.
#[derive(Debug, Clone)]
pub struct PromptSnapshot {
    pub world: Arc<MapWorld>,
    pub cursor: CanvasPoint,
    pub visited_locations: String,
    pub chat_log: Vec<ChatTurn>,
    pub at_ms: u64,
}

impl PromptSnapshot {
    pub fn of(session: &ExplorationSession) -> Result<Self, AgentError> {
        session.ensure_open()?;
        Ok(Self {
            world: Arc::clone(session.world()),
            cursor: session.cursor(),
            visited_locations: session.visited_string(),
            chat_log: chat_window(session.chat_history()).to_vec(),
            at_ms: session.elapsed_ms(),
        })
    }

    pub fn geometry(&self) -> SessionGeometry<'_> {
        SessionGeometry {
            world: &self.world,
            cursor: self.cursor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptOptions {
    pub include_screenshot: bool,
    pub jpeg_quality: u8,
}

impl Default for PromptOptions {
    fn default() -> Self {
        Self {
            include_screenshot: true,
            jpeg_quality: DEFAULT_JPEG_QUALITY,
        }
    }
}

pub fn build_prompt_from(
    snapshot: &PromptSnapshot,
    question: &str,
    options: PromptOptions,
) -> Result<PromptBundle, AgentError> {
    let question = question.trim();
    if question.is_empty() {
        return Err(AgentError::EmptyQuestion);
    }
    let world = &snapshot.world;
    let spatial_layout = if world.zones().is_empty() {
        SpatialLayout {
            current_zone_line: current_zone_line(None),
            neighbor_lines: Vec::new(),
        }
    } else {
        describe_position(world, snapshot.cursor)?
    };
    let screenshot_jpeg = if options.include_screenshot {
        let img = render_canvas(world, Some(snapshot.cursor), &RenderStyle::default());
        Some(encode_jpeg(&img, options.jpeg_quality)?)
    } else {
        None
    };
    Ok(PromptBundle {
        system_instruction: SYSTEM_INSTRUCTION.to_string(),
        chat_log: snapshot.chat_log.clone(),
        visited_locations: snapshot.visited_locations.clone(),
        screenshot_jpeg,
        current_zone_line: spatial_layout.current_zone_line.clone(),
        spatial_layout,
        user_question: question.to_string(),
    })
}

pub fn build_prompt(session: &ExplorationSession, question: &str) -> Result<PromptBundle, AgentError> {
    build_prompt_from(&PromptSnapshot::of(session)?, question, PromptOptions::default())
}

#[derive(Debug, Clone)]
pub struct AskOutcome {
    pub user_turn: ChatTurn,
    pub agent_turn: ChatTurn,
    /// Set when the provider failed and `agent_turn` is the fallback.
    pub provider_error: Option<ProviderError>,
}

/// Build the prompt and call the provider without touching the session.
pub fn run_ask(
    snapshot: &PromptSnapshot,
    question: &str,
    provider: &dyn Provider,
) -> Result<AskOutcome, AgentError> {
    let options = PromptOptions {
        include_screenshot: provider.needs_screenshot(),
        ..PromptOptions::default()
    };
    let bundle = build_prompt_from(snapshot, question, options)?;
    let user_turn = ChatTurn::user(bundle.user_question.clone(), snapshot.at_ms, snapshot.cursor);
    let (agent_turn, provider_error) = match provider.respond(&bundle, &snapshot.geometry()) {
        Ok(text) if !text.trim().is_empty() => (ChatTurn::agent(text.trim(), snapshot.at_ms), None),
        Ok(_) => (
            ChatTurn::fallback(snapshot.at_ms),
            Some(ProviderError::Rejected("empty reply".into())),
        ),
        Err(e) => {
            debug!(error = %e, "provider failed, using fallback turn");
            (ChatTurn::fallback(snapshot.at_ms), Some(e))
        }
    };
    Ok(AskOutcome {
        user_turn,
        agent_turn,
        provider_error,
    })
}

impl ExplorationSession {
    /// Append a question/answer pair produced by [`run_ask`].
    pub fn record_exchange(&mut self, outcome: &AskOutcome) -> Result<(), SessionError> {
        self.ensure_open()?;
        self.chat_history.push(outcome.user_turn.clone());
        self.chat_history.push(outcome.agent_turn.clone());
        Ok(())
    }

    /// Append one turn, e.g. when restoring a transcript.
    pub fn push_chat_turn(&mut self, turn: ChatTurn) -> Result<(), SessionError> {
        self.ensure_open()?;
        self.chat_history.push(turn);
        Ok(())
    }
}

/// Synchronous ask: prompt, dispatch, record both turns, return the answer.
pub fn ask(session: &mut ExplorationSession, question: &str, provider: &dyn Provider) -> Result<AskOutcome, AgentError> {
    let snapshot = PromptSnapshot::of(session)?;
    let outcome = run_ask(&snapshot, question, provider)?;
    session.record_exchange(&outcome)?;
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// Mock responder

/// Question families the mock recognises.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryIntent {
    Confirmation { target: String, claimed: Sector },
    Comparison { smaller: bool },
    Guidance { target: String },
    Identification,
    Surroundings,
    Knowledge { target: Option<String> },
    Unknown,
}

fn normalize(question: &str) -> String {
    let lowered = question.to_lowercase().replace('’', "'");
    let cleaned: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' || c == '-' || c == '&' { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn strip_target(raw: &str) -> String {
    let mut t = raw.trim();
    for suffix in [" from here", " from me", " on this map", " on the map", " please", " now"] {
        if let Some(s) = t.strip_suffix(suffix) {
            t = s.trim_end();
        }
    }
    for prefix in ["the ", "a ", "an "] {
        if let Some(s) = t.strip_prefix(prefix) {
            t = s;
            break;
        }
    }
    t.trim().to_string()
}

/// Longest direction phrase at the start of `text` (handles "north east").
fn leading_sector(text: &str) -> Option<Sector> {
    let words: Vec<&str> = text.split_whitespace().collect();
    (1..=words.len().min(2))
        .rev()
        .find_map(|n| Sector::parse(&words[..n].concat()))
}

fn after<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    text.find(marker).map(|i| &text[i + marker.len()..])
}

pub fn classify_question(question: &str) -> QueryIntent {
    let q = normalize(question);
    let padded = format!(" {q} ");

    // "is X still to my D" / "is X to my D"
    if let Some(rest) = q.strip_prefix("is ") {
        for marker in [" still to my ", " to my ", " still on my ", " on my "] {
            if let Some(i) = rest.find(marker) {
                if let Some(claimed) = leading_sector(&rest[i + marker.len()..]) {
                    return QueryIntent::Confirmation {
                        target: strip_target(&rest[..i]),
                        claimed,
                    };
                }
            }
        }
    }
    // "am i still D of X": the user claims to be D of X, so X lies opposite.
    if let Some(rest) = q.strip_prefix("am i ") {
        let rest = rest.strip_prefix("still ").unwrap_or(rest);
        if let Some(i) = rest.find(" of ") {
            if let Some(dir) = Sector::parse(&rest[..i]) {
                return QueryIntent::Confirmation {
                    target: strip_target(&rest[i + 4..]),
                    claimed: dir.opposite(),
                };
            }
        }
    }
    if ["bigger", "larger", "smaller"].iter().any(|w| padded.contains(&format!(" {w} "))) {
        return QueryIntent::Comparison {
            smaller: padded.contains(" smaller "),
        };
    }
    for marker in [
        "where is ",
        "where's ",
        "get to ",
        "go to ",
        "way to ",
        "take me to ",
        "directions to ",
        "direction to ",
        "find ",
        "reach ",
    ] {
        if let Some(rest) = after(&q, marker) {
            let target = strip_target(rest);
            if !target.is_empty() {
                return QueryIntent::Guidance { target };
            }
        }
    }
    if ["where am i", "what am i touching", "what am i on", "what is this", "what's this", "what is here", "what's here"]
        .iter()
        .any(|m| q.contains(m))
    {
        return QueryIntent::Identification;
    }
    if [" around ", " near ", " nearby ", " surrounding ", " surrounds ", " close to me ", " next to me "]
        .iter()
        .any(|m| padded.contains(m))
    {
        return QueryIntent::Surroundings;
    }
    for marker in ["tell me about ", "tell me more about ", "more about ", "what kind of place is ", "what is ", "what's "] {
        if let Some(rest) = after(&q, marker) {
            let target = strip_target(rest);
            let here = matches!(target.as_str(), "" | "it" | "this" | "this place" | "here");
            return QueryIntent::Knowledge {
                target: (!here).then_some(target),
            };
        }
    }
    if q.contains("tell me more") || q.contains("what kind") || q.contains("what type") {
        return QueryIntent::Knowledge { target: None };
    }
    QueryIntent::Unknown
}

fn name_keys(zone: &Zone) -> impl Iterator<Item = String> + '_ {
    std::iter::once(zone.name.to_lowercase()).chain(
        ["short_name", "alt_name", "official_name"]
            .into_iter()
            .filter_map(|k| zone.tags.get(k).map(|v| v.to_lowercase())),
    )
}

/// Case-insensitive substring match on the name (or short/alt name).
/// Ties go to the shortest name, then the nearest zone, then zone id.
pub fn find_zone<'a>(world: &'a MapWorld, cursor: CanvasPoint, target: &str) -> Option<&'a Zone> {
    let needle = target.trim().to_lowercase();
    if needle.is_empty() {
        return None;
    }
    let from = world.projection().unproject(cursor);
    world
        .zones()
        .iter()
        .filter(|z| name_keys(z).any(|k| k.contains(&needle)))
        .min_by(|a, b| {
            a.name
                .chars()
                .count()
                .cmp(&b.name.chars().count())
                .then_with(|| {
                    crate::geo::geo_distance_m(from, a.centroid).total_cmp(&crate::geo::geo_distance_m(from, b.centroid))
                })
                .then_with(|| a.zone_id.cmp(&b.zone_id))
        })
}

fn not_found(target: &str) -> String {
    format!("I can't find a {target} on this map.")
}

fn contains_cursor(world: &MapWorld, zone: &Zone, cursor: CanvasPoint) -> bool {
    world
        .position_of(&zone.zone_id)
        .is_some_and(|i| world.projected()[i].contains(cursor))
}

fn position_sentence(world: &MapWorld, zone: &Zone, cursor: CanvasPoint) -> Result<String, GeometryError> {
    egocentric_sentence(world, zone, cursor)
}

fn round_area(m2: f64) -> u64 {
    if m2 < 1000.0 {
        ((m2 / 10.0).round() as u64).max(1) * 10
    } else {
        (m2 / 100.0).round() as u64 * 100
    }
}

fn tag_summary(zone: &Zone) -> String {
    const KEYS: [&str; 10] = [
        "building", "amenity", "tourism", "leisure", "landuse", "natural", "water", "shop", "sport", "operator",
    ];
    let parts: Vec<String> = KEYS
        .iter()
        .filter_map(|k| zone.tags.get(*k).map(|v| (k, v)))
        .filter(|(_, v)| v.as_str() != "yes")
        .map(|(k, v)| format!("{k} {}", v.replace('_', " ")))
        .collect();
    if parts.is_empty() {
        String::new()
    } else {
        format!(" It is tagged as {}.", parts.join(", "))
    }
}

fn category_phrase(category: ZoneCategory) -> &'static str {
    match category {
        ZoneCategory::Building => "a building",
        ZoneCategory::Park => "a park or green space",
        ZoneCategory::Water => "a body of water",
        ZoneCategory::OtherArea => "an open area",
    }
}

/// The question's named zones in order of first mention.
fn mentioned_zones<'a>(world: &'a MapWorld, question: &str) -> Vec<&'a Zone> {
    let q = normalize(question);
    let mut hits: Vec<(usize, &Zone)> = world
        .zones()
        .iter()
        .filter_map(|z| {
            name_keys(z)
                .map(|k| normalize(&k))
                .filter(|k| k.len() >= 3 && !k.starts_with("unnamed "))
                .filter_map(|k| q.find(&k))
                .min()
                .map(|pos| (pos, z))
        })
        .collect();
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.name.len().cmp(&a.1.name.len())));
    let mut seen = Vec::new();
    for (_, z) in hits {
        if !seen.iter().any(|s: &&Zone| s.name == z.name) {
            seen.push(z);
        }
    }
    seen
}

fn comparison_pair<'a>(world: &'a MapWorld, question: &str, cursor: CanvasPoint) -> Vec<&'a Zone> {
    let mut pair = mentioned_zones(world, question);
    pair.truncate(2);
    if pair.len() == 2 {
        return pair;
    }
    let q = normalize(question);
    let wanted = ZoneCategory::ALL.into_iter().find(|c| q.contains(c.label()));
    let pool = world
        .hit_test(cursor)
        .into_iter()
        .chain(world.nearest_zones(cursor, 10).into_iter().map(|n| n.zone));
    for z in pool {
        if pair.len() == 2 {
            break;
        }
        if wanted.is_none_or(|c| z.category == c) && !pair.iter().any(|p| p.zone_id == z.zone_id) {
            pair.push(z);
        }
    }
    pair
}

/// Keyword-routed answer built only from geometry, using the same
/// templates as the spatial layout so directions and distances agree.
pub fn mock_respond(bundle: &PromptBundle, geometry: &SessionGeometry<'_>) -> String {
    let SessionGeometry { world, cursor } = *geometry;
    let question = &bundle.user_question;
    if world.zones().is_empty() {
        return "This map has no zones yet, so there is nothing to describe.".into();
    }
    match classify_question(question) {
        QueryIntent::Confirmation { target, claimed } => {
            let Some(zone) = find_zone(world, cursor, &target) else {
                return not_found(&target);
            };
            if contains_cursor(world, zone, cursor) {
                return format!("You are on {} right now.", zone.name);
            }
            match relative_position(world, zone, cursor) {
                Ok((sector, distance)) if sector == claimed => {
                    format!("Yes, {} is still to your {}, {} away.", zone.name, sector.word(), distance.long())
                }
                Ok((sector, distance)) => format!(
                    "No, {} is now to your {}, {} away.",
                    zone.name,
                    sector.word(),
                    distance.long()
                ),
                Err(_) => format!("{} is right under your finger.", zone.name),
            }
        }
        QueryIntent::Comparison { smaller } => {
            let pair = comparison_pair(world, question, cursor);
            let [a, b] = pair[..] else {
                return "I need two places to compare. Try naming both of them.".into();
            };
            let (big, small) = if a.area_m2 >= b.area_m2 { (a, b) } else { (b, a) };
            if smaller {
                format!(
                    "{} is smaller than {}: about {} square meters versus about {} square meters.",
                    small.name,
                    big.name,
                    round_area(small.area_m2),
                    round_area(big.area_m2)
                )
            } else {
                format!(
                    "{} is bigger than {}: about {} square meters versus about {} square meters.",
                    big.name,
                    small.name,
                    round_area(big.area_m2),
                    round_area(small.area_m2)
                )
            }
        }
        QueryIntent::Guidance { target } => {
            let Some(zone) = find_zone(world, cursor, &target) else {
                return not_found(&target);
            };
            if contains_cursor(world, zone, cursor) {
                return format!("You are already on {}.", zone.name);
            }
            match relative_position(world, zone, cursor) {
                Ok((sector, _)) => format!(
                    "{} Move your finger to the {} to reach it.",
                    position_sentence(world, zone, cursor).unwrap_or_default(),
                    sector.word()
                ),
                Err(_) => format!("{} is right under your finger.", zone.name),
            }
        }
        QueryIntent::Identification => match world.hit_test(cursor) {
            Some(zone) => format!("You are on {}, {}.", zone.name, category_phrase(zone.category)),
            None => {
                let nearest = world.nearest_zones(cursor, 1);
                match nearest.first() {
                    Some(n) => format!(
                        "You are over an empty area. The closest place is {}, to your {}, {} away.",
                        n.zone.name,
                        n.sector.word(),
                        RoundedDistance::from_meters(n.distance_m).long()
                    ),
                    None => "You are over an empty area.".into(),
                }
            }
        },
        QueryIntent::Surroundings => {
            let near = world.nearest_zones(cursor, 3);
            let sentences: Vec<String> = near
                .iter()
                .map(|n| {
                    format!(
                        "{} is to your {}, {} away.",
                        n.zone.name,
                        n.sector.word(),
                        RoundedDistance::from_meters(n.distance_m).long()
                    )
                })
                .collect();
            let here = world
                .hit_test(cursor)
                .map(|z| format!("You are on {}. ", z.name))
                .unwrap_or_default();
            format!("{here}Around you: {}", sentences.join(" "))
        }
        QueryIntent::Knowledge { target } => {
            let zone = match &target {
                Some(t) => match find_zone(world, cursor, t) {
                    Some(z) => z,
                    None => return not_found(t),
                },
                None => match world.hit_test(cursor) {
                    Some(z) => z,
                    None => return "Your finger is over an empty area, so there is nothing to describe here.".into(),
                },
            };
            format!(
                "{} is {} covering about {} square meters.{}",
                zone.name,
                category_phrase(zone.category),
                round_area(zone.area_m2),
                tag_summary(zone)
            )
        }
        QueryIntent::Unknown => "I can tell you where you are, describe what is around you, guide you to a \
named place, compare the size of two places, or confirm a direction. Try asking \"Where am I?\""
            .into(),
    }
}
