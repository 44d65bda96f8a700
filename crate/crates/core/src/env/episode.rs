use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::action::{parse_action, Action};
use super::{EnvError, ErrorLayer, Observation, DEFAULT_MAX_STEPS, DEFAULT_OBSERVATION_BYTES};
use crate::query_gen::{canonical_text, QueryInstance};
use crate::tools::{FixtureStore, Strictness, ToolRegistry, FINAL_ANSWER_PARAM};

/// Which checks are active. Turning `action_monitoring` off skips the
/// structure, toolname and arguments layers; `trajectory_monitoring` is
/// carried here for the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monitoring {
    pub action_monitoring: bool,
    pub trajectory_monitoring: bool,
}

impl Default for Monitoring {
    fn default() -> Self {
        Self {
            action_monitoring: true,
            trajectory_monitoring: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub max_steps: usize,
    pub strictness: Strictness,
    pub monitoring: Monitoring,
    pub max_observation_bytes: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            strictness: Strictness::Strict,
            monitoring: Monitoring::default(),
            max_observation_bytes: DEFAULT_OBSERVATION_BYTES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EpisodeStatus {
    Running,
    Finished { final_answer: String },
    StepLimitExceeded,
}

/// One error observation. `step` is 1-based; `layer` is absent only for
/// errors raised while action monitoring is off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<ErrorLayer>,
}

#[derive(Debug, Clone)]
pub struct EpisodeState {
    pub instance: QueryInstance,
    pub step_index: usize,
    pub history: Vec<(Action, Observation)>,
    pub error_history: Vec<ErrorRecord>,
    pub store: FixtureStore,
    pub status: EpisodeStatus,
}

impl EpisodeState {
    pub fn is_running(&self) -> bool {
        self.status == EpisodeStatus::Running
    }
}

pub struct Environment<'r> {
    registry: &'r ToolRegistry,
    config: EnvConfig,
}

impl<'r> Environment<'r> {
    pub fn new(registry: &'r ToolRegistry, config: EnvConfig) -> Self {
        Self { registry, config }
    }

    pub fn registry(&self) -> &'r ToolRegistry {
        self.registry
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// Same environment with a different monitoring profile.
    pub fn with_monitoring(mut self, monitoring: Monitoring) -> Self {
        self.config.monitoring = monitoring;
        self
    }

    /// Fresh episode over a private copy of `store`.
    pub fn reset(&self, instance: &QueryInstance, store: &FixtureStore) -> EpisodeState {
        EpisodeState {
            instance: instance.clone(),
            step_index: 0,
            history: Vec::new(),
            error_history: Vec::new(),
            store: store.clone(),
            status: EpisodeStatus::Running,
        }
    }

    pub fn step(&self, state: &mut EpisodeState, raw: &str) -> Result<Observation, EnvError> {
        if !state.is_running() {
            return Err(EnvError::SteppingTerminatedEpisode(state.instance.instance_id.clone()));
        }
        let action = parse_action(raw);
        let (observation, final_answer) = self.classify_and_handle(state, &action);
        state.history.push((action, observation.clone()));
        state.step_index = state.history.len();
        if observation.is_error {
            state.error_history.push(ErrorRecord {
                step: state.step_index,
                layer: observation.error_layer,
            });
        }
        if let Some(answer) = final_answer {
            state.status = EpisodeStatus::Finished { final_answer: answer };
        } else if state.step_index >= self.config.max_steps {
            state.status = EpisodeStatus::StepLimitExceeded;
        }
        Ok(observation)
    }

    /// Validates and executes one action. Returns the observation and, for
    /// a successful terminal call, the final answer.
    pub fn classify_and_handle(
        &self,
        state: &mut EpisodeState,
        action: &Action,
    ) -> (Observation, Option<String>) {
        if self.config.monitoring.action_monitoring {
            self.handle_monitored(state, action)
        } else {
            self.handle_unmonitored(state, action)
        }
    }

    fn handle_monitored(&self, state: &mut EpisodeState, action: &Action) -> (Observation, Option<String>) {
        let Some(call) = &action.parsed else {
            let why = action.parse_error.as_deref().unwrap_or("unparseable action");
            return (Observation::error(Some(ErrorLayer::Structure), format!("ERROR[structure]: {why}")), None);
        };
        let offered = state.instance.available_tools.contains(&call.tool_name);
        let spec = match self.registry.get(&call.tool_name) {
            Some(spec) if offered => spec,
            _ => {
                let text = format!(
                    "ERROR[toolname]: tool \"{}\" is not available. Available tools: {}",
                    call.tool_name,
                    state.instance.available_tools.join(", ")
                );
                return (Observation::error(Some(ErrorLayer::Toolname), text), None);
            }
        };
        let faults = spec.validate_args(&call.arguments, self.config.strictness);
        if !faults.is_empty() {
            let listed: Vec<String> = faults.iter().map(ToString::to_string).collect();
            let text = format!("ERROR[arguments]: tool \"{}\": {}", call.tool_name, listed.join("; "));
            return (Observation::error(Some(ErrorLayer::Arguments), text), None);
        }
        let result = spec.execute(&call.arguments, &mut state.store);
        if let Some(message) = result.error_message() {
            let text = format!("ERROR[execution]: tool \"{}\" failed: {message}", call.tool_name);
            return (Observation::error(Some(ErrorLayer::Execution), text), None);
        }
        let final_answer = result.terminal.then(|| final_answer_text(&result.payload));
        (Observation::ok(self.truncate(canonical_text(&result.payload))), final_answer)
    }

    fn handle_unmonitored(&self, state: &mut EpisodeState, action: &Action) -> (Observation, Option<String>) {
        let failure = |detail: &str| Observation::error(None, format!("ERROR: {detail}"));
        let Some(call) = &action.parsed else {
            return (failure("the action could not be executed"), None);
        };
        let Some(spec) = self.registry.get(&call.tool_name) else {
            return (failure("the action could not be executed"), None);
        };
        let result = spec.execute(&call.arguments, &mut state.store);
        if let Some(message) = result.error_message() {
            return (failure(message), None);
        }
        let final_answer = result.terminal.then(|| final_answer_text(&result.payload));
        (Observation::ok(self.truncate(canonical_text(&result.payload))), final_answer)
    }

    fn truncate(&self, text: String) -> String {
        let budget = self.config.max_observation_bytes;
        if text.len() <= budget {
            return text;
        }
        let mut cut = budget;
        while !text.is_char_boundary(cut) {
            cut -= 1;
        }
        format!("{}...[truncated {} bytes]", &text[..cut], text.len() - cut)
    }
}

fn final_answer_text(payload: &Value) -> String {
    payload.get(FINAL_ANSWER_PARAM).map(canonical_text).unwrap_or_default()
}
