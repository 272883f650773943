/// JSON Schema (draft 2020-12) for every event frame on a session stream.
pub const FEEDBACK_EVENT_SCHEMA: &str = include_str!("../schema/feedback_event.schema.json");
