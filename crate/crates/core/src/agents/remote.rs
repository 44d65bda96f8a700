//! Client for chat-completions style endpoints with function calling.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{AgentError, AgentPolicy, ConversationView};
use crate::env::{format_tool_call, format_with_thought, parse_action, ToolCall};

pub const EXPLORATION_TEMPERATURE: f64 = 1.0;
pub const EVALUATION_TEMPERATURE: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Base URL; requests go to `{endpoint}/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1".to_string(),
            model: "gpt-4o-mini".to_string(),
            temperature: EXPLORATION_TEMPERATURE,
            api_key_env: "OPENAI_API_KEY".to_string(),
            max_retries: 3,
            backoff_ms: 500,
            timeout_secs: 120,
        }
    }
}

pub struct RemoteChatAgent {
    config: RemoteConfig,
    api_key: String,
    http: ureq::Agent,
}

impl RemoteChatAgent {
    /// Reads the key from `config.api_key_env`; fails before any network use
    /// if it is unset or empty.
    pub fn from_env(config: RemoteConfig) -> Result<Self, AgentError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| AgentError::Configuration(format!("environment variable {} is not set", config.api_key_env)))?;
        Ok(Self::with_key(config, api_key))
    }

    pub fn with_key(config: RemoteConfig, api_key: String) -> Self {
        let http = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, api_key, http }
    }

    pub fn request_body(&self, view: &ConversationView) -> Value {
        json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": chat_messages(view),
            "tools": tool_schemas(view),
        })
    }

    fn post(&self, body: &Value) -> Result<Value, AgentError> {
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
            let response = self
                .http
                .post(&url)
                .header("Authorization", format!("Bearer {}", self.api_key))
                .send_json(body);
            match response {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if status == 429 || status >= 500 {
                        last_error = format!("HTTP {status}");
                        continue;
                    }
                    let text = resp
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| AgentError::TransportFailure(e.to_string()))?;
                    if !(200..300).contains(&status) {
                        return Err(AgentError::TransportFailure(format!("HTTP {status}: {text}")));
                    }
                    // an unparseable body is handed back as text and
                    // classified by the environment like any other bad action
                    return Ok(serde_json::from_str(&text).unwrap_or(Value::String(text)));
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(AgentError::TransportFailure(format!(
            "{} attempts failed, last error: {last_error}",
            self.config.max_retries + 1
        )))
    }
}

impl AgentPolicy for RemoteChatAgent {
    fn next_action(&mut self, view: &ConversationView) -> Result<String, AgentError> {
        let response = self.post(&self.request_body(view))?;
        Ok(raw_action_from_response(&response))
    }
}

fn tool_schemas(view: &ConversationView) -> Vec<Value> {
    view.tool_specs
        .iter()
        .map(|tool| {
            let properties: Map<String, Value> = tool
                .params
                .iter()
                .map(|p| {
                    (
                        p.name.clone(),
                        json!({"type": p.value_type.json_schema_type(), "description": p.description}),
                    )
                })
                .collect();
            let required: Vec<&str> = tool.params.iter().filter(|p| p.required).map(|p| p.name.as_str()).collect();
            json!({
                "type": "function",
                "function": {
                    "name": tool.name,
                    "description": tool.description,
                    "parameters": {"type": "object", "properties": properties, "required": required},
                },
            })
        })
        .collect()
}

/// Parsed turns become assistant tool calls answered by tool messages;
/// unparseable turns become plain assistant text answered by a user message.
pub(crate) fn chat_messages(view: &ConversationView) -> Vec<Value> {
    let mut messages = vec![
        json!({"role": "system", "content": view.system_prompt}),
        json!({"role": "user", "content": view.query_text}),
    ];
    for (i, turn) in view.turns.iter().enumerate() {
        match parse_action(&turn.raw).parsed {
            Some(call) => {
                let id = format!("call_{}", i + 1);
                messages.push(json!({
                    "role": "assistant",
                    "content": null,
                    "tool_calls": [{
                        "id": id,
                        "type": "function",
                        "function": {"name": call.tool_name, "arguments": Value::Object(call.arguments).to_string()},
                    }],
                }));
                messages.push(json!({"role": "tool", "tool_call_id": id, "content": turn.observation}));
            }
            None => {
                messages.push(json!({"role": "assistant", "content": turn.raw}));
                messages.push(json!({"role": "user", "content": turn.observation}));
            }
        }
    }
    messages
}

/// The raw action for a completion response: the first tool call in wire
/// syntax (with any message text as the thought), else the message text.
pub(crate) fn raw_action_from_response(response: &Value) -> String {
    let Some(message) = response.pointer("/choices/0/message") else {
        return format!("malformed response: {}", response.to_string().replace(['{', '}'], ""));
    };
    let content = message.get("content").and_then(Value::as_str).unwrap_or("").trim();
    let Some(function) = message.pointer("/tool_calls/0/function") else {
        return content.to_string();
    };
    let name = function.get("name").and_then(Value::as_str).unwrap_or("");
    let arguments = match function.get("arguments") {
        Some(Value::String(s)) => serde_json::from_str::<Value>(s).unwrap_or_else(|_| Value::String(s.clone())),
        Some(other) => other.clone(),
        None => Value::Object(Map::new()),
    };
    let raw = match arguments {
        Value::Object(args) => format_tool_call(&ToolCall::new(name, args)),
        // leave it for the structure layer to reject
        other => json!({"tool_name": name, "arguments": other}).to_string(),
    };
    if content.is_empty() {
        raw
    } else {
        let call = parse_action(&raw).parsed;
        match call {
            Some(call) => format_with_thought(content, &call),
            None => raw,
        }
    }
}
