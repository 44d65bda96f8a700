use std::collections::BTreeMap;

use serde_json::{Map, Value};

use super::{AgentError, AgentFactory, AgentPolicy, ConversationView};
use crate::env::{format_tool_call, ToolCall};
use crate::query_gen::{canonical_text, resolve_argument, ArgValue, QueryInstance, QueryTemplate};
use crate::tools::FINAL_ANSWER_PARAM;

/// Replays a template's solution path, resolving arguments from the
/// placeholder values and earlier observations, then finishes with the
/// extracted answer.
///
/// Progress is the number of error-free turns so far, so a rejected call
/// (for instance one mangled by fault injection) is simply issued again.
pub struct OracleAgent {
    template: QueryTemplate,
    values: BTreeMap<String, Value>,
}

impl OracleAgent {
    pub fn new(template: QueryTemplate, instance: &QueryInstance) -> Self {
        Self {
            template,
            values: instance.placeholder_values.clone(),
        }
    }

    fn results(view: &ConversationView) -> Vec<Value> {
        view.turns
            .iter()
            .filter_map(|t| serde_json::from_str::<Value>(&t.observation).ok())
            .filter(Value::is_object)
            .collect()
    }

    fn next_call(&self, view: &ConversationView) -> Result<ToolCall, AgentError> {
        let results = Self::results(view);
        let fail = |e: &dyn std::fmt::Display| AgentError::OracleResolutionFailure(e.to_string());
        if let Some(step) = self.template.solution_path.get(results.len()) {
            let offered = view.tool(&step.tool_name).is_some();
            let alternative = self
                .template
                .toolset_policy
                .alternatives
                .get(&step.tool_name)
                .filter(|alt| view.tool(&alt.tool_name).is_some());
            return match (offered, alternative) {
                (false, Some(alt)) => {
                    let mut args = Map::new();
                    for (param, source) in &alt.argument_map {
                        args.insert(param.clone(), resolve_argument(source, &self.values, &results).map_err(|e| fail(&e))?);
                    }
                    Ok(ToolCall::new(alt.tool_name.clone(), args))
                }
                _ => {
                    let mut args = Map::new();
                    for (param, arg) in &step.arguments {
                        let value = match arg {
                            ArgValue::Literal(v) => v.clone(),
                            ArgValue::Resolve => resolve_argument(param, &self.values, &results).map_err(|e| fail(&e))?,
                        };
                        args.insert(param.clone(), value);
                    }
                    Ok(ToolCall::new(step.tool_name.clone(), args))
                }
            };
        }
        let last = results
            .last()
            .ok_or_else(|| AgentError::OracleResolutionFailure("no tool results to extract from".into()))?;
        let path = self.template.extraction_path(&self.values).map_err(|e| fail(&e))?;
        let answer = canonical_text(path.apply(last).map_err(|e| fail(&e))?);
        let terminal = view.terminal_tool().unwrap_or("Finish");
        let mut args = Map::new();
        args.insert(FINAL_ANSWER_PARAM.to_string(), Value::String(answer));
        Ok(ToolCall::new(terminal, args))
    }
}

impl AgentPolicy for OracleAgent {
    fn next_action(&mut self, view: &ConversationView) -> Result<String, AgentError> {
        self.next_call(view).map(|call| format_tool_call(&call))
    }
}

/// Oracle agents for instances of a known template set.
pub struct OracleFactory {
    templates: BTreeMap<String, QueryTemplate>,
}

impl OracleFactory {
    pub fn new(templates: impl IntoIterator<Item = QueryTemplate>) -> Self {
        Self {
            templates: templates.into_iter().map(|t| (t.template_id.clone(), t)).collect(),
        }
    }

    pub fn oracle_for(&self, instance: &QueryInstance) -> Result<OracleAgent, AgentError> {
        let template = self
            .templates
            .get(&instance.template_id)
            .ok_or_else(|| AgentError::UnknownTemplate(instance.template_id.clone()))?;
        Ok(OracleAgent::new(template.clone(), instance))
    }
}

impl AgentFactory for OracleFactory {
    fn create(&self, instance: &QueryInstance, _episode_seed: u64) -> Result<Box<dyn AgentPolicy>, AgentError> {
        Ok(Box::new(self.oracle_for(instance)?))
    }
}
