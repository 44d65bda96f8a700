use std::collections::VecDeque;

use serde_json::{Map, Value};

use super::{AgentError, AgentFactory, AgentPolicy, ConversationView};
use crate::env::{format_tool_call, ToolCall};
use crate::query_gen::QueryInstance;
use crate::tools::FINAL_ANSWER_PARAM;

/// Replays fixed raw actions. Once the script runs out it finishes with an
/// empty answer.
#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    script: VecDeque<String>,
}

impl ScriptedAgent {
    pub fn new<S: Into<String>>(script: impl IntoIterator<Item = S>) -> Self {
        Self {
            script: script.into_iter().map(Into::into).collect(),
        }
    }
}

impl AgentPolicy for ScriptedAgent {
    fn next_action(&mut self, view: &ConversationView) -> Result<String, AgentError> {
        if let Some(raw) = self.script.pop_front() {
            return Ok(raw);
        }
        let mut args = Map::new();
        args.insert(FINAL_ANSWER_PARAM.to_string(), Value::String(String::new()));
        Ok(format_tool_call(&ToolCall::new(view.terminal_tool().unwrap_or("Finish"), args)))
    }
}

/// The same script for every episode.
#[derive(Debug, Clone)]
pub struct ScriptedFactory {
    script: Vec<String>,
}

impl ScriptedFactory {
    pub fn new(script: Vec<String>) -> Self {
        Self { script }
    }
}

impl AgentFactory for ScriptedFactory {
    fn create(&self, _instance: &QueryInstance, _episode_seed: u64) -> Result<Box<dyn AgentPolicy>, AgentError> {
        Ok(Box::new(ScriptedAgent::new(self.script.clone())))
    }
}
