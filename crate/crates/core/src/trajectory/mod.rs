//! Trajectory records, the acceptance filter and chat-dataset export.

mod export;
mod filter;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EpisodeState, EpisodeStatus, ErrorLayer, ErrorRecord};

pub use export::{export_chat_dataset, ChatMessage, ChatRecord, ExportOptions, Role};
pub use filter::{
    check_error_recovery, filter_trajectory, match_answer, normalize, FilterOptions, FilterReport,
    FilterVerdict, MatchMode, VerdictReason,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub raw: String,
    pub observation: String,
    pub is_error: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_layer: Option<ErrorLayer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    Finished { final_answer: String },
    StepLimitExceeded,
    /// The policy failed (error or panic) before the episode ended.
    Aborted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub episode_id: String,
    pub instance_id: String,
    pub steps: Vec<Step>,
    pub terminal: Terminal,
    pub error_history: Vec<ErrorRecord>,
}

impl Trajectory {
    /// Snapshot of an episode. A still-running episode is recorded as
    /// aborted with `abort_reason` (or a generic reason).
    pub fn from_state(episode_id: impl Into<String>, state: &EpisodeState, abort_reason: Option<String>) -> Self {
        let terminal = match (&state.status, abort_reason) {
            (_, Some(reason)) => Terminal::Aborted { reason },
            (EpisodeStatus::Finished { final_answer }, None) => Terminal::Finished {
                final_answer: final_answer.clone(),
            },
            (EpisodeStatus::StepLimitExceeded, None) => Terminal::StepLimitExceeded,
            (EpisodeStatus::Running, None) => Terminal::Aborted {
                reason: "episode ended while still running".to_string(),
            },
        };
        Self {
            episode_id: episode_id.into(),
            instance_id: state.instance.instance_id.clone(),
            steps: state
                .history
                .iter()
                .map(|(action, obs)| Step {
                    raw: action.raw.clone(),
                    observation: obs.text.clone(),
                    is_error: obs.is_error,
                    error_layer: obs.error_layer,
                })
                .collect(),
            terminal,
            error_history: state.error_history.clone(),
        }
    }

    pub fn final_answer(&self) -> Option<&str> {
        match &self.terminal {
            Terminal::Finished { final_answer } => Some(final_answer),
            _ => None,
        }
    }

    /// Error records rebuilt from the steps.
    pub fn errors_from_steps(&self) -> Vec<ErrorRecord> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_error)
            .map(|(i, s)| ErrorRecord {
                step: i + 1,
                layer: s.error_layer,
            })
            .collect()
    }

    pub fn is_consistent(&self) -> bool {
        self.errors_from_steps() == self.error_history
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrajectoryError {
    #[error("trajectory {trajectory} belongs to instance {expected}, not {given}")]
    InstanceMismatch {
        trajectory: String,
        expected: String,
        given: String,
    },
    #[error("trajectory {episode_id} was not accepted ({reason})")]
    UnacceptedTrajectory { episode_id: String, reason: VerdictReason },
    #[error("no instance {0} for trajectory export")]
    UnknownInstance(String),
}
