//! Query templates, placeholder sampling, ground truth and tool-set assembly.

mod bundled;
mod extract;
mod generate;
mod sample;
mod template;

use thiserror::Error;

pub use bundled::{bundled_templates, BUNDLED_TEMPLATES_JSON};
pub use extract::{canonical_text, find_key, resolve_argument, ExtractionPath, PathSegment};
pub use generate::{
    assemble_toolset, compute_ground_truth, generate_instances, GenerationContext, QueryInstance,
};
pub use sample::{
    render_query, sample_placeholders, IdentityParaphraser, Paraphraser, PoolProvider,
    ValueProvider,
};
pub use template::{
    display_value, markers, parse_template, parse_templates, serialize_template,
    serialize_templates, validate, ArgValue, PlaceholderSpec, PlaceholderType, QueryTemplate,
    SolutionStep, TemplateFault, ToolAlternative, ToolsetPolicy,
};

#[derive(Debug, Error)]
pub enum QueryGenError {
    #[error("malformed template document: {0}")]
    MalformedDocument(String),
    #[error("template {template_id} is invalid: {}", join_faults(.faults))]
    InvalidTemplate {
        template_id: String,
        faults: Vec<TemplateFault>,
    },
    #[error("duplicate template id {0}")]
    DuplicateTemplateId(String),
    #[error("no candidate values for placeholder {0}")]
    EmptyPool(String),
    #[error("placeholder {placeholder} expects {expected}, got {value}")]
    TypeMismatch {
        placeholder: String,
        expected: String,
        value: String,
    },
    #[error("no value for placeholder {0}")]
    MissingValue(String),
    #[error("cannot resolve argument {0} from placeholders or earlier results")]
    UnresolvableArgument(String),
    #[error("invalid extraction path {0}")]
    InvalidExtractionPath(String),
    #[error("extraction path {path} not found in {document}")]
    ExtractionPathMissing { path: String, document: String },
    #[error("unknown tool {0}")]
    UnknownTool(String),
    #[error("tool {tool} failed during ground-truth computation: {message}")]
    ToolExecutionFailure { tool: String, message: String },
    #[error("required tool {0} is not in the registry")]
    UnknownRequiredTool(String),
    #[error("registry has no terminal tool")]
    MissingTerminalTool,
    #[error("need {needed} distractor tools but only {available} are eligible")]
    InsufficientDistractors { needed: usize, available: usize },
    #[error("requested {requested} unique instances, only {achieved} possible")]
    UniquenessExhausted {
        requested: usize,
        achieved: usize,
        partial: Box<Vec<QueryInstance>>,
    },
    #[error("template {0} produced an empty ground truth")]
    EmptyGroundTruth(String),
    #[error("instance count must be positive")]
    InvalidCount,
    #[error("value provider: {0}")]
    Provider(String),
    #[error("paraphraser: {0}")]
    Paraphrase(String),
}

fn join_faults(faults: &[TemplateFault]) -> String {
    faults.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
