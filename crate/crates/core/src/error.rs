use thiserror::Error;

use crate::engine::EventKind;
use crate::time::SimTime;

/// Runtime failures inside a single simulation run.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("determinism violation: event at t={event} scheduled while clock is at t={now}")]
    PastEvent { event: SimTime, now: SimTime },

    #[error("internal consistency violation: {0}")]
    Consistency(String),

    #[error("run aborted while dispatching {kind:?} at t={time}: {source}")]
    Dispatch {
        time: SimTime,
        kind: EventKind,
        #[source]
        source: Box<SimError>,
    },

    #[error("trace output failed: {0}")]
    Trace(#[from] std::io::Error),
}

impl SimError {
    pub fn consistency(msg: impl Into<String>) -> Self {
        SimError::Consistency(msg.into())
    }
}

/// A configuration problem, reported with the offending line when known.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("line {line}: invalid value for `{key}`: {message}")]
    InvalidValue {
        line: usize,
        key: String,
        message: String,
    },

    #[error("{0}")]
    Invalid(String),
}
