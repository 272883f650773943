//! Deterministic trace replay producing a text transcript.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::agent::{run_ask, AgentError, ChatTurn, PromptSnapshot, Provider};
use crate::exploration::{ExplorationSession, FeedbackEvent, FeedbackKind, SessionError, TraceRecord};
use crate::geo::CanvasPoint;
use crate::ingest::ZoneDataset;
use crate::world::MapWorld;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayTranscript {
    pub text: String,
    pub audio_labels: Vec<String>,
    pub answers: Vec<(String, String)>,
    pub events: Vec<FeedbackEvent>,
}

fn kind_name(kind: FeedbackKind) -> &'static str {
    match kind {
        FeedbackKind::ZoneEnter => "zone_enter",
        FeedbackKind::ZoneExit => "zone_exit",
        FeedbackKind::BoundaryExit => "boundary_exit",
        FeedbackKind::BoundaryReenter => "boundary_reenter",
        FeedbackKind::AudioLabel => "audio_label",
    }
}

pub fn format_event(e: &FeedbackEvent) -> String {
    let mut line = format!(
        "{:>7} {:<16} {}",
        format!("t={}", e.at_ms),
        kind_name(e.kind),
        e.zone_ref.as_deref().unwrap_or("-")
    );
    if let Some(h) = &e.haptic {
        let _ = write!(line, " haptic={}", h.pattern_id);
    }
    if let Some(s) = &e.speech_text {
        let _ = write!(line, " speech={s:?}");
    }
    line
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Builds the transcript text. Shared by in-process replay and by clients
/// that drive a remote session, so both produce identical bytes.
#[derive(Debug, Default)]
pub struct TranscriptWriter {
    out: ReplayTranscript,
}

impl TranscriptWriter {
    pub fn new(dataset: &ZoneDataset) -> Self {
        let mut w = Self::default();
        let _ = writeln!(
            w.out.text,
            "# replay place={} center={} radius_m={} zones={}",
            dataset.place_query.as_deref().unwrap_or("-"),
            dataset.center,
            dataset.radius_m,
            dataset.zones.len()
        );
        w
    }

    pub fn event(&mut self, e: FeedbackEvent) {
        if e.kind == FeedbackKind::AudioLabel {
            if let Some(s) = &e.speech_text {
                self.out.audio_labels.push(s.clone());
            }
        }
        self.out.text.push_str(&format_event(&e));
        self.out.text.push('\n');
        self.out.events.push(e);
    }

    pub fn exchange(&mut self, at_ms: u64, cursor: CanvasPoint, question: &str, answer: &ChatTurn) {
        let t = format!("t={at_ms}");
        let _ = writeln!(self.out.text, "{t:>7} ask @({:.1},{:.1}) {question:?}", cursor.x, cursor.y);
        let flag = if answer.is_error { " [error]" } else { "" };
        let _ = writeln!(self.out.text, "{t:>7} answer{flag} {:?}", answer.text);
        self.out.answers.push((question.to_string(), answer.text.clone()));
    }

    pub fn finish(mut self, visited: &str) -> ReplayTranscript {
        let _ = writeln!(self.out.text, "# visited {visited}");
        self.out
    }
}

/// Feed every record through a fresh session. Only trace time appears in
/// the output, so the transcript is byte-stable.
pub fn replay_trace(
    world: Arc<MapWorld>,
    records: &[TraceRecord],
    provider: &dyn Provider,
) -> Result<ReplayTranscript, ReplayError> {
    let mut session = ExplorationSession::new("replay", Arc::clone(&world));
    let mut out = TranscriptWriter::new(world.dataset());
    let mut now = 0u64;
    for rec in records {
        match rec {
            TraceRecord::Move { t_ms, x, y } => {
                now = *t_ms;
                for e in session.move_cursor_at(CanvasPoint::new(*x, *y), now)? {
                    out.event(e);
                }
            }
            TraceRecord::Ask { ask, t_ms } => {
                if let Some(t) = t_ms {
                    now = *t;
                }
                let mut snapshot = PromptSnapshot::of(&session)?;
                snapshot.at_ms = now;
                let outcome = run_ask(&snapshot, ask, provider)?;
                session.record_exchange(&outcome)?;
                out.exchange(now, session.cursor(), ask, &outcome.agent_turn);
            }
        }
    }
    Ok(out.finish(&session.visited_string()))
}
