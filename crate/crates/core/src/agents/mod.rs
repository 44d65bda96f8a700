//! Agent policies and the episode/exploration runners.

mod fault;
mod oracle;
mod remote;
mod runner;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EpisodeState;
use crate::query_gen::QueryInstance;
use crate::tools::{ParamSpec, ToolRegistry};

pub use fault::{Fault, FaultInjectingAgent};
pub use oracle::{OracleAgent, OracleFactory};
pub use remote::{RemoteChatAgent, RemoteConfig, EVALUATION_TEMPERATURE, EXPLORATION_TEMPERATURE};
pub use runner::{run_episode, run_exploration, ExplorationConfig, ExplorationOutcome};
pub use scripted::{ScriptedAgent, ScriptedFactory};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub is_terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub raw: String,
    pub observation: String,
}

/// Everything a policy may see: instructions, the user query, the offered
/// tools and the exchange so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationView {
    pub system_prompt: String,
    pub query_text: String,
    pub tool_specs: Vec<ToolSchema>,
    pub turns: Vec<Turn>,
}

impl ConversationView {
    pub fn from_state(state: &EpisodeState, registry: &ToolRegistry, system_prompt: &str) -> Self {
        let tool_specs = state
            .instance
            .available_tools
            .iter()
            .filter_map(|name| registry.get(name))
            .map(|spec| ToolSchema {
                name: spec.name.clone(),
                description: spec.description.clone(),
                params: spec.params.clone(),
                is_terminal: spec.is_terminal,
            })
            .collect();
        Self {
            system_prompt: system_prompt.to_string(),
            query_text: state.instance.query_text.clone(),
            tool_specs,
            turns: state
                .history
                .iter()
                .map(|(action, obs)| Turn {
                    raw: action.raw.clone(),
                    observation: obs.text.clone(),
                })
                .collect(),
        }
    }

    /// Name of the offered terminal tool, if any.
    pub fn terminal_tool(&self) -> Option<&str> {
        self.tool_specs.iter().find(|t| t.is_terminal).map(|t| t.name.as_str())
    }

    pub fn tool(&self, name: &str) -> Option<&ToolSchema> {
        self.tool_specs.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("oracle cannot resolve its next call: {0}")]
    OracleResolutionFailure(String),
    #[error("no template {0} for the oracle")]
    UnknownTemplate(String),
    #[error("transport failure: {0}")]
    TransportFailure(String),
    #[error("agent configuration: {0}")]
    Configuration(String),
    #[error("policy failed: {0}")]
    Policy(String),
    #[error("target_accepted must be at least 1")]
    InvalidTarget,
    #[error("no instances to explore")]
    NoInstances,
    #[error("accepted {accepted} of {target} trajectories within {attempts} attempts")]
    TargetUnreachable {
        target: usize,
        accepted: usize,
        attempts: usize,
        partial: Box<ExplorationOutcome>,
    },
}

/// Maps the conversation so far to the next raw action.
pub trait AgentPolicy: Send {
    fn next_action(&mut self, view: &ConversationView) -> Result<String, AgentError>;
}

/// Builds one policy per episode.
pub trait AgentFactory: Sync {
    fn create(&self, instance: &QueryInstance, episode_seed: u64) -> Result<Box<dyn AgentPolicy>, AgentError>;
}

impl<F> AgentFactory for F
where
    F: Fn(&QueryInstance, u64) -> Result<Box<dyn AgentPolicy>, AgentError> + Sync,
{
    fn create(&self, instance: &QueryInstance, episode_seed: u64) -> Result<Box<dyn AgentPolicy>, AgentError> {
        self(instance, episode_seed)
    }
}
