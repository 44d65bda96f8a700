//! Query templates and their document format.
//!
//! Template documents are JSON objects using the field names
//! `query_template`, `placeholders_metadata`, `solution_paths` and
//! `task_available_tools`, extended with `template_id`,
//! `answer_extraction` and `toolset_policy`. A `null` argument in a
//! solution step means "resolve this at execution time".

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::extract::ExtractionPath;
use super::QueryGenError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceholderType {
    #[serde(alias = "str", alias = "string")]
    Text,
    #[serde(alias = "int")]
    Integer,
    #[serde(alias = "float", alias = "number")]
    Decimal,
    Enum,
}

impl fmt::Display for PlaceholderType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlaceholderType::Text => "text",
            PlaceholderType::Integer => "integer",
            PlaceholderType::Decimal => "decimal",
            PlaceholderType::Enum => "enum",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaceholderSpec {
    pub name: String,
    pub value_type: PlaceholderType,
    pub description: String,
    pub candidate_pool: Option<Vec<Value>>,
}

impl PlaceholderSpec {
    /// Whether `value` is a legal value for this placeholder.
    pub fn accepts(&self, value: &Value) -> bool {
        match self.value_type {
            PlaceholderType::Text => value.is_string(),
            PlaceholderType::Integer => value.is_i64() || value.is_u64(),
            PlaceholderType::Decimal => value.is_number(),
            PlaceholderType::Enum => self
                .candidate_pool
                .as_ref()
                .is_some_and(|pool| pool.contains(value)),
        }
    }
}

/// A solution-step argument: a fixed literal, or resolved at run time from
/// placeholder values and earlier tool results.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    Resolve,
    Literal(Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionStep {
    pub tool_name: String,
    pub arguments: BTreeMap<String, ArgValue>,
}

/// Replacement for a solution-path tool when the instance offers a
/// different tool for the same job.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolAlternative {
    pub tool_name: String,
    /// Alternative parameter name → name to resolve (placeholder or result key).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub argument_map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolsetPolicy {
    /// Tools always offered. Empty means "the solution-path tools".
    #[serde(default)]
    pub required_tools: Vec<String>,
    #[serde(default)]
    pub distractor_count: usize,
    #[serde(default = "default_true")]
    pub include_terminal: bool,
    /// Solution tool name → alternative offered in its place.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alternatives: BTreeMap<String, ToolAlternative>,
}

fn default_true() -> bool {
    true
}

impl Default for ToolsetPolicy {
    fn default() -> Self {
        Self {
            required_tools: Vec::new(),
            distractor_count: 0,
            include_terminal: true,
            alternatives: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryTemplate {
    pub template_id: String,
    pub template_text: String,
    pub placeholders: BTreeMap<String, PlaceholderSpec>,
    pub solution_path: Vec<SolutionStep>,
    /// Path into the final step's result; may contain `{placeholder}` markers.
    /// Empty selects the whole result.
    pub answer_extraction: String,
    pub toolset_policy: ToolsetPolicy,
}

impl QueryTemplate {
    /// Tool names used by the solution path, in first-use order.
    pub fn solution_tools(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.solution_path
            .iter()
            .map(|s| s.tool_name.as_str())
            .filter(|name| seen.insert(*name))
            .collect()
    }

    /// The extraction path with placeholder markers filled in.
    pub fn extraction_path(
        &self,
        values: &BTreeMap<String, Value>,
    ) -> Result<ExtractionPath, QueryGenError> {
        let expr = substitute_markers(&self.answer_extraction, values)?;
        ExtractionPath::parse(&expr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateFault {
    UnknownPlaceholderMarker(String),
    UnusedPlaceholderSpec(String),
    EmptySolutionPath,
    EmptyEnumPool(String),
    PoolTypeMismatch(String),
    BadExtraction(String),
}

impl fmt::Display for TemplateFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateFault::UnknownPlaceholderMarker(n) => {
                write!(f, "marker {{{n}}} has no placeholder metadata")
            }
            TemplateFault::UnusedPlaceholderSpec(n) => {
                write!(f, "placeholder \"{n}\" does not appear in the template text")
            }
            TemplateFault::EmptySolutionPath => f.write_str("solution path is empty"),
            TemplateFault::EmptyEnumPool(n) => {
                write!(f, "enum placeholder \"{n}\" has no candidate pool")
            }
            TemplateFault::PoolTypeMismatch(n) => {
                write!(f, "candidate pool of \"{n}\" contains values of the wrong type")
            }
            TemplateFault::BadExtraction(msg) => write!(f, "answer extraction: {msg}"),
        }
    }
}

fn marker_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").expect("valid regex"))
}

/// `{name}` markers in order of appearance (repeats included).
pub fn markers(text: &str) -> Vec<&str> {
    marker_regex()
        .captures_iter(text)
        .map(|c| c.get(1).expect("group").as_str())
        .collect()
}

/// Text form of a placeholder value when substituted into prose.
pub fn display_value(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub(crate) fn substitute_markers(
    text: &str,
    values: &BTreeMap<String, Value>,
) -> Result<String, QueryGenError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for caps in marker_regex().captures_iter(text) {
        let whole = caps.get(0).expect("match");
        let name = &caps[1];
        let value = values
            .get(name)
            .ok_or_else(|| QueryGenError::MissingValue(name.to_string()))?;
        out.push_str(&text[last..whole.start()]);
        out.push_str(&display_value(value));
        last = whole.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaceholderDoc {
    #[serde(rename = "type")]
    value_type: PlaceholderType,
    #[serde(default)]
    description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidate_pool: Option<Vec<Value>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    tool_call: String,
    #[serde(default)]
    arguments: Map<String, Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    template_id: Option<String>,
    query_template: String,
    #[serde(default)]
    placeholders_metadata: BTreeMap<String, PlaceholderDoc>,
    #[serde(default)]
    solution_paths: Vec<StepDoc>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    answer_extraction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    toolset_policy: Option<ToolsetPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    task_available_tools: Option<Vec<String>>,
}

fn derived_template_id(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    format!("tpl-{}", &hex::encode(digest)[..12])
}

impl TemplateDoc {
    fn into_template(self) -> Result<QueryTemplate, QueryGenError> {
        let template_id = self
            .template_id
            .unwrap_or_else(|| derived_template_id(&self.query_template));
        let toolset_policy = match (self.toolset_policy, self.task_available_tools) {
            (Some(_), Some(_)) => {
                return Err(QueryGenError::MalformedDocument(format!(
                    "template {template_id}: give either toolset_policy or task_available_tools, not both"
                )))
            }
            (Some(policy), None) => policy,
            (None, Some(tools)) => ToolsetPolicy {
                required_tools: tools,
                ..ToolsetPolicy::default()
            },
            (None, None) => ToolsetPolicy::default(),
        };
        let placeholders = self
            .placeholders_metadata
            .into_iter()
            .map(|(name, doc)| {
                let spec = PlaceholderSpec {
                    name: name.clone(),
                    value_type: doc.value_type,
                    description: doc.description,
                    candidate_pool: doc.candidate_pool,
                };
                (name, spec)
            })
            .collect();
        let solution_path = self
            .solution_paths
            .into_iter()
            .map(|step| SolutionStep {
                tool_name: step.tool_call,
                arguments: step
                    .arguments
                    .into_iter()
                    .map(|(k, v)| {
                        let arg = if v.is_null() { ArgValue::Resolve } else { ArgValue::Literal(v) };
                        (k, arg)
                    })
                    .collect(),
            })
            .collect();
        let template = QueryTemplate {
            template_id,
            template_text: self.query_template,
            placeholders,
            solution_path,
            answer_extraction: self.answer_extraction,
            toolset_policy,
        };
        let faults = validate(&template);
        if faults.is_empty() {
            Ok(template)
        } else {
            Err(QueryGenError::InvalidTemplate {
                template_id: template.template_id,
                faults,
            })
        }
    }

    fn from_template(t: &QueryTemplate) -> Self {
        TemplateDoc {
            template_id: Some(t.template_id.clone()),
            query_template: t.template_text.clone(),
            placeholders_metadata: t
                .placeholders
                .iter()
                .map(|(name, spec)| {
                    (
                        name.clone(),
                        PlaceholderDoc {
                            value_type: spec.value_type,
                            description: spec.description.clone(),
                            candidate_pool: spec.candidate_pool.clone(),
                        },
                    )
                })
                .collect(),
            solution_paths: t
                .solution_path
                .iter()
                .map(|step| StepDoc {
                    tool_call: step.tool_name.clone(),
                    arguments: step
                        .arguments
                        .iter()
                        .map(|(k, v)| {
                            let v = match v {
                                ArgValue::Resolve => Value::Null,
                                ArgValue::Literal(v) => v.clone(),
                            };
                            (k.clone(), v)
                        })
                        .collect(),
                })
                .collect(),
            answer_extraction: t.answer_extraction.clone(),
            toolset_policy: Some(t.toolset_policy.clone()),
            task_available_tools: None,
        }
    }
}

/// Checks the structural invariants of a template and returns every fault.
pub fn validate(t: &QueryTemplate) -> Vec<TemplateFault> {
    let mut faults = Vec::new();
    let in_text: BTreeSet<&str> = markers(&t.template_text).into_iter().collect();
    let mut unknown: BTreeSet<&str> = in_text
        .iter()
        .copied()
        .filter(|m| !t.placeholders.contains_key(*m))
        .collect();
    for m in markers(&t.answer_extraction) {
        if !t.placeholders.contains_key(m) {
            unknown.insert(m);
        }
    }
    faults.extend(unknown.into_iter().map(|m| TemplateFault::UnknownPlaceholderMarker(m.to_string())));
    for name in t.placeholders.keys() {
        if !in_text.contains(name.as_str()) {
            faults.push(TemplateFault::UnusedPlaceholderSpec(name.clone()));
        }
    }
    for (name, spec) in &t.placeholders {
        let pool = spec.candidate_pool.as_deref().unwrap_or(&[]);
        if spec.value_type == PlaceholderType::Enum {
            if pool.is_empty() {
                faults.push(TemplateFault::EmptyEnumPool(name.clone()));
            }
        } else if !pool.iter().all(|v| spec.accepts(v)) {
            faults.push(TemplateFault::PoolTypeMismatch(name.clone()));
        }
    }
    if t.solution_path.is_empty() {
        faults.push(TemplateFault::EmptySolutionPath);
    }
    // syntax check with every marker replaced by a plain key
    let probe = marker_regex().replace_all(&t.answer_extraction, "k");
    if let Err(e) = ExtractionPath::parse(&probe) {
        faults.push(TemplateFault::BadExtraction(e.to_string()));
    }
    faults
}

/// Parses one template document.
pub fn parse_template(raw: &str) -> Result<QueryTemplate, QueryGenError> {
    let doc: TemplateDoc =
        serde_json::from_str(raw).map_err(|e| QueryGenError::MalformedDocument(e.to_string()))?;
    doc.into_template()
}

/// Parses a document holding either one template object or an array of them.
pub fn parse_templates(raw: &str) -> Result<Vec<QueryTemplate>, QueryGenError> {
    let value: Value =
        serde_json::from_str(raw).map_err(|e| QueryGenError::MalformedDocument(e.to_string()))?;
    let docs = match value {
        Value::Array(items) => items,
        single => vec![single],
    };
    let templates = docs
        .into_iter()
        .map(|v| {
            let doc: TemplateDoc = serde_json::from_value(v)
                .map_err(|e| QueryGenError::MalformedDocument(e.to_string()))?;
            doc.into_template()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut ids = BTreeSet::new();
    for t in &templates {
        if !ids.insert(t.template_id.as_str()) {
            return Err(QueryGenError::DuplicateTemplateId(t.template_id.clone()));
        }
    }
    Ok(templates)
}

pub fn serialize_template(t: &QueryTemplate) -> String {
    serde_json::to_string_pretty(&TemplateDoc::from_template(t)).expect("template serializes")
}

pub fn serialize_templates(ts: &[QueryTemplate]) -> String {
    let docs: Vec<TemplateDoc> = ts.iter().map(TemplateDoc::from_template).collect();
    serde_json::to_string_pretty(&docs).expect("templates serialize")
}
