use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{filter_trajectory, FilterOptions, Trajectory, TrajectoryError};
use crate::query_gen::QueryInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

/// One dataset line: `{"messages": [{"role": ..., "content": ...}, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRecord {
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExportOptions {
    /// Drop erroneous steps (and their feedback) from the messages.
    pub elide_error_steps: bool,
}

/// Chat records for accepted trajectories, ordered by episode id. Each
/// trajectory is re-filtered; a rejected one fails the whole export.
pub fn export_chat_dataset(
    accepted: &[Trajectory],
    instances: &BTreeMap<String, QueryInstance>,
    system_prompt: &str,
    filter: FilterOptions,
    options: ExportOptions,
) -> Result<Vec<ChatRecord>, TrajectoryError> {
    let mut ordered: Vec<&Trajectory> = accepted.iter().collect();
    ordered.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    ordered
        .into_iter()
        .map(|traj| {
            let instance = instances
                .get(&traj.instance_id)
                .ok_or_else(|| TrajectoryError::UnknownInstance(traj.instance_id.clone()))?;
            let verdict = filter_trajectory(traj, instance, filter)?;
            if !verdict.accepted {
                return Err(TrajectoryError::UnacceptedTrajectory {
                    episode_id: traj.episode_id.clone(),
                    reason: verdict.reason,
                });
            }
            let mut messages = vec![
                ChatMessage::new(Role::System, system_prompt),
                ChatMessage::new(Role::User, instance.query_text.clone()),
            ];
            for step in &traj.steps {
                if options.elide_error_steps && step.is_error {
                    continue;
                }
                messages.push(ChatMessage::new(Role::Assistant, step.raw.clone()));
                messages.push(ChatMessage::new(Role::Tool, step.observation.clone()));
            }
            Ok(ChatRecord { messages })
        })
        .collect()
}
