//! Human classification study: stimulus delivery in a fixed order,
//! forced-choice response capture and per-block results.
//!
//! Stimuli come from benchmarks previously written under a store directory.
//! Clients only ever see opaque stimulus ids; labels stay server side until
//! a session is complete.

mod manager;
mod session;
mod store;

pub use manager::{Ack, Next, SessionManager};
pub use session::{
    BlockCondition, BlockResult, CreateSession, ResponseRecord, SessionBlock, SessionResults, StimulusDescriptor,
    StudySession, TimedResponse,
};
pub use store::{block_size, display_px, StimulusStore, StoredSet, StoredStimulus, BLOCK_ORDER};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),

    #[error("unknown stimulus `{0}`")]
    UnknownStimulus(String),

    #[error("no stored condition {0}")]
    UnknownCondition(String),

    #[error("invalid condition: {0}")]
    InvalidCondition(String),

    #[error("session is complete")]
    Complete,

    #[error("session is not complete")]
    Incomplete,

    #[error("expected response for `{expected}`, got `{got}`")]
    OutOfOrder { expected: String, got: String },

    #[error("stimulus `{0}` already answered")]
    Duplicate(String),

    #[error("label `{label}` not allowed; choose one of {allowed}")]
    InvalidLabel { label: String, allowed: String },

    #[error("corrupt session log {path}: {reason}")]
    CorruptLog { path: String, reason: String },
}
