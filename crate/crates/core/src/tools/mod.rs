//! Tool schemas, argument validation and the deterministic mock-tool sandbox.
//!
//! Every tool is data: a [`ToolSpec`] names its parameters and binds to a
//! [`Behavior`] that reads (and sometimes mutates) an episode-local
//! [`FixtureStore`]. Nothing here touches the network.

mod behavior;
mod catalog;
mod fixtures;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub use behavior::{AggregateOp, Behavior};
pub use catalog::{bundled_catalog, BUNDLED_CATALOG_JSON};
pub use fixtures::FixtureStore;

/// Tool-call arguments as they arrive from an agent.
pub type Args = Map<String, Value>;

/// Name of the single required parameter of a terminal tool.
pub const FINAL_ANSWER_PARAM: &str = "final_answer";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    #[serde(alias = "string", alias = "str")]
    Text,
    #[serde(alias = "int")]
    Integer,
    #[serde(alias = "number", alias = "float")]
    Decimal,
    #[serde(alias = "bool")]
    Boolean,
    #[serde(alias = "array")]
    List,
    #[serde(alias = "dict")]
    Object,
}

impl ParamType {
    /// Checks a JSON value against this type without any coercion.
    /// Integers are accepted where a decimal is expected; numeric strings
    /// are never accepted as numbers.
    pub fn accepts(self, value: &Value) -> bool {
        match self {
            ParamType::Text => value.is_string(),
            ParamType::Integer => value.is_i64() || value.is_u64(),
            ParamType::Decimal => value.is_number(),
            ParamType::Boolean => value.is_boolean(),
            ParamType::List => value.is_array(),
            ParamType::Object => value.is_object(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ParamType::Text => "text",
            ParamType::Integer => "integer",
            ParamType::Decimal => "decimal",
            ParamType::Boolean => "boolean",
            ParamType::List => "list",
            ParamType::Object => "object",
        }
    }

    /// JSON-schema type name, used when advertising tools to chat models.
    pub fn json_schema_type(self) -> &'static str {
        match self {
            ParamType::Text => "string",
            ParamType::Integer => "integer",
            ParamType::Decimal => "number",
            ParamType::Boolean => "boolean",
            ParamType::List => "array",
            ParamType::Object => "object",
        }
    }
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Short name of a JSON value's kind, for fault messages.
pub fn json_kind(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(n) if n.is_f64() => "decimal",
        Value::Number(_) => "integer",
        Value::String(_) => "text",
        Value::Array(_) => "list",
        Value::Object(_) => "object",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub value_type: ParamType,
    #[serde(default)]
    pub required: bool,
    #[serde(default)]
    pub description: String,
}

impl ParamSpec {
    pub fn required(name: &str, value_type: ParamType, description: &str) -> Self {
        Self {
            name: name.to_string(),
            value_type,
            required: true,
            description: description.to_string(),
        }
    }

    pub fn optional(name: &str, value_type: ParamType, description: &str) -> Self {
        Self {
            required: false,
            ..Self::required(name, value_type, description)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
    pub behavior: Behavior,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_terminal: bool,
}

/// How unknown parameters are treated by [`ToolSpec::validate_args`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fault", rename_all = "snake_case")]
pub enum ArgumentFault {
    MissingRequired { name: String },
    UnknownParam { name: String },
    TypeMismatch { name: String, expected: ParamType, found: String },
}

impl fmt::Display for ArgumentFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgumentFault::MissingRequired { name } => {
                write!(f, "missing required parameter \"{name}\"")
            }
            ArgumentFault::UnknownParam { name } => write!(f, "unknown parameter \"{name}\""),
            ArgumentFault::TypeMismatch { name, expected, found } => {
                write!(f, "parameter \"{name}\" expects {expected}, got {found}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolStatus {
    Ok,
    Error,
}

/// Outcome of one tool execution. `payload` is the result document on
/// success and a non-empty message string on error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub status: ToolStatus,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub terminal: bool,
}

impl ToolResult {
    pub fn ok(payload: Value) -> Self {
        Self {
            status: ToolStatus::Ok,
            payload,
            terminal: false,
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        let mut message = message.into();
        if message.trim().is_empty() {
            message = "tool execution failed".to_string();
        }
        Self {
            status: ToolStatus::Error,
            payload: Value::String(message),
            terminal: false,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ToolStatus::Ok
    }

    pub fn error_message(&self) -> Option<&str> {
        match self.status {
            ToolStatus::Error => self.payload.as_str(),
            ToolStatus::Ok => None,
        }
    }
}

impl ToolSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Returns every fault in `args`; an empty list means the call is valid.
    /// A `null` value for an optional parameter counts as absent.
    pub fn validate_args(&self, args: &Args, strictness: Strictness) -> Vec<ArgumentFault> {
        let mut faults = Vec::new();
        for param in &self.params {
            match args.get(&param.name) {
                None => {
                    if param.required {
                        faults.push(ArgumentFault::MissingRequired {
                            name: param.name.clone(),
                        });
                    }
                }
                Some(Value::Null) if !param.required => {}
                Some(value) => {
                    if !param.value_type.accepts(value) {
                        faults.push(ArgumentFault::TypeMismatch {
                            name: param.name.clone(),
                            expected: param.value_type,
                            found: json_kind(value).to_string(),
                        });
                    }
                }
            }
        }
        if strictness == Strictness::Strict {
            for name in args.keys() {
                if self.param(name).is_none() {
                    faults.push(ArgumentFault::UnknownParam { name: name.clone() });
                }
            }
        }
        faults
    }

    /// Runs the tool's behavior. Never panics on bad input: failures come
    /// back as an error [`ToolResult`].
    pub fn execute(&self, args: &Args, store: &mut FixtureStore) -> ToolResult {
        behavior::run(self, args, store)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("tool \"{0}\" is already registered")]
    DuplicateToolName(String),
    #[error("cannot register terminal tool \"{new}\": \"{existing}\" is already the terminal tool")]
    MultipleTerminalTools { existing: String, new: String },
    #[error("terminal tool \"{0}\" must take exactly one required parameter \"final_answer\"")]
    InvalidTerminalTool(String),
    #[error("tool \"{tool}\" declares parameter \"{param}\" more than once")]
    DuplicateParam { tool: String, param: String },
    #[error("malformed tool catalog: {0}")]
    MalformedCatalog(String),
}

/// Immutable-after-startup set of tools, keyed by name.
#[derive(Debug, Clone, Default)]
pub struct ToolRegistry {
    tools: BTreeMap<String, ToolSpec>,
    terminal: Option<String>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, spec: ToolSpec) -> Result<(), RegistryError> {
        if self.tools.contains_key(&spec.name) {
            return Err(RegistryError::DuplicateToolName(spec.name));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &spec.params {
            if !seen.insert(p.name.as_str()) {
                return Err(RegistryError::DuplicateParam {
                    tool: spec.name.clone(),
                    param: p.name.clone(),
                });
            }
        }
        if spec.is_terminal {
            if let Some(existing) = &self.terminal {
                return Err(RegistryError::MultipleTerminalTools {
                    existing: existing.clone(),
                    new: spec.name,
                });
            }
            let well_formed = matches!(spec.params.as_slice(),
                [p] if p.name == FINAL_ANSWER_PARAM && p.required);
            if !well_formed || !matches!(spec.behavior, Behavior::Terminal) {
                return Err(RegistryError::InvalidTerminalTool(spec.name));
            }
            self.terminal = Some(spec.name.clone());
        }
        self.tools.insert(spec.name.clone(), spec);
        Ok(())
    }

    pub fn from_specs(specs: impl IntoIterator<Item = ToolSpec>) -> Result<Self, RegistryError> {
        let mut registry = Self::new();
        for spec in specs {
            registry.register(spec)?;
        }
        Ok(registry)
    }

    /// Parses a tool catalog document (a JSON array of tool specs).
    pub fn from_catalog_json(raw: &str) -> Result<Self, RegistryError> {
        let specs: Vec<ToolSpec> =
            serde_json::from_str(raw).map_err(|e| RegistryError::MalformedCatalog(e.to_string()))?;
        Self::from_specs(specs)
    }

    /// The 57-tool catalog shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_specs(bundled_catalog()).expect("bundled catalog is valid")
    }

    pub fn get(&self, name: &str) -> Option<&ToolSpec> {
        self.tools.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tools.contains_key(name)
    }

    pub fn terminal_tool(&self) -> Option<&ToolSpec> {
        self.terminal.as_deref().and_then(|n| self.tools.get(n))
    }

    pub fn is_terminal(&self, name: &str) -> bool {
        self.terminal.as_deref() == Some(name)
    }

    /// Tool names in sorted order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tools.keys().map(String::as_str)
    }

    pub fn specs(&self) -> impl Iterator<Item = &ToolSpec> {
        self.tools.values()
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn details_tool() -> ToolSpec {
        ToolSpec {
            name: "get_movie_details_for_movie_tools".into(),
            description: "details".into(),
            params: vec![ParamSpec::required("id", ParamType::Integer, "movie id")],
            behavior: Behavior::Constant { value: json!({}) },
            is_terminal: false,
        }
    }

    fn args(v: Value) -> Args {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn valid_args_have_no_faults() {
        assert!(details_tool()
            .validate_args(&args(json!({"id": 155})), Strictness::Strict)
            .is_empty());
    }

    #[test]
    fn missing_required_is_reported() {
        let faults = details_tool().validate_args(&args(json!({})), Strictness::Strict);
        assert_eq!(faults, vec![ArgumentFault::MissingRequired { name: "id".into() }]);
    }

    #[test]
    fn unknown_param_depends_on_strictness() {
        let a = args(json!({"id": 155, "verbose": true}));
        assert_eq!(
            details_tool().validate_args(&a, Strictness::Strict),
            vec![ArgumentFault::UnknownParam { name: "verbose".into() }]
        );
        assert!(details_tool().validate_args(&a, Strictness::Lenient).is_empty());
    }

    #[test]
    fn numeric_strings_are_not_coerced() {
        let faults = details_tool().validate_args(&args(json!({"id": "155"})), Strictness::Strict);
        assert_eq!(
            faults,
            vec![ArgumentFault::TypeMismatch {
                name: "id".into(),
                expected: ParamType::Integer,
                found: "text".into()
            }]
        );
        let decimal = ParamType::Decimal;
        assert!(decimal.accepts(&json!(3)));
        assert!(!ParamType::Integer.accepts(&json!(3.5)));
    }

    #[test]
    fn all_faults_are_collected() {
        let mut spec = details_tool();
        spec.params.push(ParamSpec::required("lang", ParamType::Text, ""));
        let faults = spec.validate_args(&args(json!({"id": true, "x": 1})), Strictness::Strict);
        assert_eq!(faults.len(), 3);
    }

    #[test]
    fn duplicate_registration_fails() {
        let mut registry = ToolRegistry::new();
        registry.register(details_tool()).unwrap();
        assert!(registry.get("get_movie_details_for_movie_tools").is_some());
        assert_eq!(
            registry.register(details_tool()),
            Err(RegistryError::DuplicateToolName(
                "get_movie_details_for_movie_tools".into()
            ))
        );
    }

    #[test]
    fn terminal_tool_shape_is_enforced() {
        let finish = |name: &str| ToolSpec {
            name: name.into(),
            description: String::new(),
            params: vec![ParamSpec::required(FINAL_ANSWER_PARAM, ParamType::Text, "")],
            behavior: Behavior::Terminal,
            is_terminal: true,
        };
        let mut registry = ToolRegistry::new();
        registry.register(finish("Finish")).unwrap();
        assert!(matches!(
            registry.register(finish("Submit")),
            Err(RegistryError::MultipleTerminalTools { .. })
        ));
        let mut bad = finish("Other");
        bad.params.clear();
        assert!(matches!(
            ToolRegistry::new().register(bad),
            Err(RegistryError::InvalidTerminalTool(_))
        ));
    }

    #[test]
    fn bundled_catalog_has_57_tools_and_one_terminal() {
        let registry = ToolRegistry::bundled();
        assert_eq!(registry.len(), 57);
        assert_eq!(registry.terminal_tool().unwrap().name, "Finish");
        assert_eq!(registry.specs().filter(|s| s.is_terminal).count(), 1);
    }
}
