//! The tool-call wire syntax.
//!
//! An action is a JSON object `{"tool_name": ..., "arguments": {...}}`,
//! optionally with a `"thought"` field, or wrapped as
//! `{"thought": ..., "action": {"tool_name": ..., "arguments": {...}}}`.
//! Free text (a thought, a code fence) may surround the object. Exactly one
//! call per action.

use serde::{Deserialize, Serialize};
use serde_json::{Deserializer, Map, Value};

use crate::tools::Args;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool_name: String,
    #[serde(default)]
    pub arguments: Args,
}

impl ToolCall {
    pub fn new(tool_name: impl Into<String>, arguments: Args) -> Self {
        Self {
            tool_name: tool_name.into(),
            arguments,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed: Option<ToolCall>,
    /// Why parsing failed; set exactly when `parsed` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
}

/// Canonical serialization of a call; `parse_action` inverts it.
pub fn format_tool_call(call: &ToolCall) -> String {
    serde_json::to_string(call).expect("tool call serializes")
}

/// Like `format_tool_call`, preceded by a one-line thought.
pub fn format_with_thought(thought: &str, call: &ToolCall) -> String {
    format!("Thought: {}\n{}", thought.trim(), format_tool_call(call))
}

/// Top-level JSON objects embedded in free text, in order of appearance.
fn embedded_objects(text: &str) -> Vec<Map<String, Value>> {
    let mut found = Vec::new();
    let mut pos = 0;
    while let Some(offset) = text[pos..].find('{') {
        let start = pos + offset;
        let mut stream = Deserializer::from_str(&text[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) => {
                found.push(map);
                pos = start + stream.byte_offset();
            }
            _ => pos = start + 1,
        }
    }
    found
}

fn call_from_object(mut obj: Map<String, Value>) -> Option<Result<ToolCall, String>> {
    if !obj.contains_key("tool_name") {
        return match obj.remove("action") {
            Some(Value::Object(inner)) if inner.contains_key("tool_name") => call_from_object(inner),
            _ => None,
        };
    }
    let name = match obj.remove("tool_name") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
        _ => return Some(Err("\"tool_name\" must be a non-empty string".to_string())),
    };
    let arguments = match obj.remove("arguments") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(args)) => args,
        Some(Value::String(s)) => match serde_json::from_str::<Value>(&s) {
            // some clients send arguments as a JSON-encoded string
            Ok(Value::Object(args)) => args,
            _ => return Some(Err(format!("arguments of \"{name}\" must be a JSON object"))),
        },
        Some(_) => return Some(Err(format!("arguments of \"{name}\" must be a JSON object"))),
    };
    Some(Ok(ToolCall::new(name, arguments)))
}

pub fn parse_action(raw: &str) -> Action {
    let mut calls: Vec<Result<ToolCall, String>> = embedded_objects(raw)
        .into_iter()
        .filter_map(call_from_object)
        .collect();
    let outcome = match calls.len() {
        0 => Err("no tool call found; respond with one JSON object of the form {\"tool_name\": ..., \"arguments\": {...}}".to_string()),
        1 => calls.pop().expect("one call"),
        n => Err(format!("found {n} tool calls; call exactly one tool per step")),
    };
    match outcome {
        Ok(call) => Action {
            raw: raw.to_string(),
            parsed: Some(call),
            parse_error: None,
        },
        Err(why) => Action {
            raw: raw.to_string(),
            parsed: None,
            parse_error: Some(why),
        },
    }
}
