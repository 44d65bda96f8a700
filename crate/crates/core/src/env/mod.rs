//! The episode loop: action parsing, layered validation, tool execution and
//! corrective feedback.

mod action;
mod episode;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action::{format_tool_call, format_with_thought, parse_action, Action, ToolCall};
pub use episode::{EnvConfig, Environment, EpisodeState, EpisodeStatus, ErrorRecord, Monitoring};

/// Default agent instructions.
pub const SYSTEM_PROMPT: &str = include_str!("../../assets/system_prompt.txt");

pub const DEFAULT_MAX_STEPS: usize = 10;
pub const DEFAULT_OBSERVATION_BYTES: usize = 4096;

/// Validation layer that rejected an action. Layers are checked in this
/// order and only the first failure is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorLayer {
    Structure,
    Toolname,
    Arguments,
    Execution,
}

impl ErrorLayer {
    pub const ALL: [ErrorLayer; 4] = [
        ErrorLayer::Structure,
        ErrorLayer::Toolname,
        ErrorLayer::Arguments,
        ErrorLayer::Execution,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorLayer::Structure => "structure",
            ErrorLayer::Toolname => "toolname",
            ErrorLayer::Arguments => "arguments",
            ErrorLayer::Execution => "execution",
        }
    }
}

impl fmt::Display for ErrorLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub text: String,
    pub is_error: bool,
    /// Absent on success, and on errors when action monitoring is off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_layer: Option<ErrorLayer>,
}

impl Observation {
    pub fn ok(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            is_error: false,
            error_layer: None,
        }
    }

    pub fn error(layer: Option<ErrorLayer>, text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            is_error: true,
            error_layer: layer,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvError {
    #[error("episode for {0} has already terminated")]
    SteppingTerminatedEpisode(String),
}
