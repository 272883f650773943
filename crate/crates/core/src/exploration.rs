//! Live exploration sessions: cursor movement becomes zone enter/exit
//! events, haptic pattern commands, spoken labels and edge warnings.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::ChatTurn;
use crate::context::{describe_position, ContextError, SpatialLayout};
use crate::geo::{CanvasPoint, CanvasProjection};
use crate::ingest::{Zone, ZoneCategory};
use crate::world::MapWorld;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("session is closed")]
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HapticPattern {
    pub pattern_id: String,
    pub pulse_ms: u32,
    pub gap_ms: u32,
    pub intensity: f64,
    pub continuous: bool,
}

impl HapticPattern {
    pub fn pulsed(id: &str, pulse_ms: u32, gap_ms: u32, intensity: f64) -> Self {
        Self {
            pattern_id: id.to_string(),
            pulse_ms,
            gap_ms,
            intensity,
            continuous: false,
        }
    }

    pub fn continuous(id: &str, intensity: f64) -> Self {
        Self {
            pattern_id: id.to_string(),
            pulse_ms: 0,
            gap_ms: 0,
            intensity,
            continuous: true,
        }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.intensity) && (self.continuous || self.pulse_ms > 0)
    }
}

/// Per-category vibration patterns plus the edge and re-entry cues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HapticConfig {
    pub building: HapticPattern,
    pub park: HapticPattern,
    pub water: HapticPattern,
    pub other_area: HapticPattern,
    pub boundary_burst: HapticPattern,
    pub reenter_confirm: HapticPattern,
}

impl Default for HapticConfig {
    fn default() -> Self {
        Self {
            building: HapticPattern::pulsed("building_rapid", 30, 50, 0.9),
            park: HapticPattern::pulsed("park_slow", 40, 150, 0.7),
            water: HapticPattern::continuous("water_soft", 0.3),
            other_area: HapticPattern::pulsed("area_medium", 35, 100, 0.6),
            boundary_burst: HapticPattern::pulsed("edge_burst", 120, 0, 1.0),
            reenter_confirm: HapticPattern::pulsed("reenter_confirm", 20, 60, 0.8),
        }
    }
}

impl HapticConfig {
    pub fn for_category(&self, category: ZoneCategory) -> &HapticPattern {
        match category {
            ZoneCategory::Building => &self.building,
            ZoneCategory::Park => &self.park,
            ZoneCategory::Water => &self.water,
            ZoneCategory::OtherArea => &self.other_area,
        }
    }
}

/// Default pattern for a zone category.
pub fn haptic_for(category: ZoneCategory) -> HapticPattern {
    HapticConfig::default().for_category(category).clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    ZoneEnter,
    ZoneExit,
    BoundaryExit,
    BoundaryReenter,
    AudioLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub kind: FeedbackKind,
    #[serde(default)]
    pub zone_ref: Option<String>,
    #[serde(default)]
    pub haptic: Option<HapticPattern>,
    #[serde(default)]
    pub speech_text: Option<String>,
    /// Milliseconds since the session started (or trace time on replay).
    pub at_ms: u64,
    pub cursor: CanvasPoint,
}

pub const REENTER_SPEECH: &str = "You are back on the map.";

/// Which way to move to get back onto the canvas from `p`. The axis with
/// the larger overshoot wins; ties go to the horizontal word.
pub fn return_direction(projection: &CanvasProjection, p: CanvasPoint) -> &'static str {
    let w = projection.width_px as f64;
    let h = projection.height_px as f64;
    let over_x = if p.x < 0.0 { -p.x } else { (p.x - w).max(0.0) };
    let over_y = if p.y < 0.0 { -p.y } else { (p.y - h).max(0.0) };
    if over_x >= over_y && over_x > 0.0 {
        if p.x < 0.0 {
            "right"
        } else {
            "left"
        }
    } else if p.y < 0.0 {
        "down"
    } else {
        "up"
    }
}

pub fn boundary_speech(projection: &CanvasProjection, p: CanvasPoint) -> String {
    format!("move {} to return to the map zone", return_direction(projection, p))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitedEntry {
    pub index: usize,
    pub zone_id: String,
    pub name: String,
}

/// `(1.Space Needle, 2.McCaw Hall)`
pub fn format_visited(visited: &[VisitedEntry]) -> String {
    let items: Vec<String> = visited.iter().map(|v| format!("{}.{}", v.index, v.name)).collect();
    format!("({})", items.join(", "))
}

#[derive(Debug, Clone)]
pub struct ExplorationSession {
    session_id: String,
    world: Arc<MapWorld>,
    haptics: HapticConfig,
    cursor: CanvasPoint,
    current_zone: Option<usize>,
    off_canvas: bool,
    visited: Vec<VisitedEntry>,
    passive_audio: bool,
    pub(crate) chat_history: Vec<ChatTurn>,
    started: Instant,
    created_at: String,
    closed: bool,
}

impl ExplorationSession {
    /// New session with the cursor at the canvas centre.
    pub fn new(session_id: impl Into<String>, world: Arc<MapWorld>) -> Self {
        Self::with_haptics(session_id, world, HapticConfig::default())
    }

    pub fn with_haptics(session_id: impl Into<String>, world: Arc<MapWorld>, haptics: HapticConfig) -> Self {
        let cursor = world.projection().center_px();
        let current_zone = world.index().hit_test(cursor);
        Self {
            session_id: session_id.into(),
            world,
            haptics,
            cursor,
            current_zone,
            off_canvas: false,
            visited: Vec::new(),
            passive_audio: true,
            chat_history: Vec::new(),
            started: Instant::now(),
            created_at: chrono::Utc::now().to_rfc3339(),
            closed: false,
        }
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn world(&self) -> &Arc<MapWorld> {
        &self.world
    }

    pub fn cursor(&self) -> CanvasPoint {
        self.cursor
    }

    pub fn current_zone(&self) -> Option<&Zone> {
        self.current_zone.map(|i| &self.world.zones()[i])
    }

    pub fn visited(&self) -> &[VisitedEntry] {
        &self.visited
    }

    pub fn visited_string(&self) -> String {
        format_visited(&self.visited)
    }

    pub fn passive_audio_enabled(&self) -> bool {
        self.passive_audio
    }

    pub fn chat_history(&self) -> &[ChatTurn] {
        &self.chat_history
    }

    pub fn created_at(&self) -> &str {
        &self.created_at
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn ensure_open(&self) -> Result<(), SessionError> {
        if self.closed {
            Err(SessionError::Closed)
        } else {
            Ok(())
        }
    }

    pub fn elapsed_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    pub fn set_passive_audio(&mut self, enabled: bool) -> Result<(), SessionError> {
        self.ensure_open()?;
        self.passive_audio = enabled;
        Ok(())
    }

    pub fn describe_position(&self) -> Result<SpatialLayout, ContextError> {
        describe_position(&self.world, self.cursor)
    }

    pub fn move_cursor(&mut self, p: CanvasPoint) -> Result<Vec<FeedbackEvent>, SessionError> {
        let at = self.elapsed_ms();
        self.move_cursor_at(p, at)
    }

    /// Move with an explicit timestamp (trace replay).
    pub fn move_cursor_at(&mut self, p: CanvasPoint, at_ms: u64) -> Result<Vec<FeedbackEvent>, SessionError> {
        self.ensure_open()?;
        let world = Arc::clone(&self.world);
        let projection = world.projection();
        let now_off = !projection.contains(p);
        let new_zone = world.index().hit_test(p);
        let event = |kind, zone_ref: Option<String>, haptic, speech_text| FeedbackEvent {
            kind,
            zone_ref,
            haptic,
            speech_text,
            at_ms,
            cursor: p,
        };

        let mut events = Vec::new();
        if new_zone != self.current_zone {
            if let Some(old) = self.current_zone {
                let zone_id = world.zones()[old].zone_id.clone();
                events.push(event(FeedbackKind::ZoneExit, Some(zone_id), None, None));
            }
        }
        if now_off && !self.off_canvas {
            events.push(event(
                FeedbackKind::BoundaryExit,
                None,
                Some(self.haptics.boundary_burst.clone()),
                Some(boundary_speech(projection, p)),
            ));
        }
        if !now_off && self.off_canvas {
            events.push(event(
                FeedbackKind::BoundaryReenter,
                None,
                Some(self.haptics.reenter_confirm.clone()),
                Some(REENTER_SPEECH.to_string()),
            ));
        }
        if new_zone != self.current_zone {
            if let Some(new) = new_zone {
                let zone = &world.zones()[new];
                let label = self.passive_audio.then(|| zone.name.clone());
                events.push(event(
                    FeedbackKind::ZoneEnter,
                    Some(zone.zone_id.clone()),
                    Some(self.haptics.for_category(zone.category).clone()),
                    label.clone(),
                ));
                if let Some(text) = label {
                    events.push(event(FeedbackKind::AudioLabel, Some(zone.zone_id.clone()), None, Some(text)));
                }
                if self.visited.last().map(|v| v.name.as_str()) != Some(zone.name.as_str()) {
                    self.visited.push(VisitedEntry {
                        index: self.visited.len() + 1,
                        zone_id: zone.zone_id.clone(),
                        name: zone.name.clone(),
                    });
                }
            }
        }

        self.cursor = p;
        self.current_zone = new_zone;
        self.off_canvas = now_off;
        Ok(events)
    }
}

/// One line of an exploration trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceRecord {
    Ask {
        ask: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_ms: Option<u64>,
    },
    Move {
        t_ms: u64,
        x: f64,
        y: f64,
    },
}

#[derive(Debug, Error)]
#[error("trace line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

/// Parse a JSON-Lines trace; blank lines are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| TraceError {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
