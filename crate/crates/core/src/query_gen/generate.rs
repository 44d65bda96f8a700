use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::extract::{canonical_text, resolve_argument};
use super::sample::{render_query, sample_placeholders, Paraphraser, ValueProvider};
use super::template::{ArgValue, QueryTemplate};
use super::QueryGenError;
use crate::seed::{derive_seed, rng_from_seed};
use crate::tools::{FixtureStore, Strictness, ToolRegistry};

/// A concrete task: what the agent is asked, which tools it gets, and the
/// precomputed answer it must reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryInstance {
    pub instance_id: String,
    pub template_id: String,
    pub placeholder_values: BTreeMap<String, Value>,
    pub query_text: String,
    pub available_tools: Vec<String>,
    pub ground_truth: String,
    pub seed: u64,
}

/// Runs the template's solution path on a private copy of `store` and
/// returns the canonical answer text.
pub fn compute_ground_truth(
    template: &QueryTemplate,
    values: &BTreeMap<String, Value>,
    registry: &ToolRegistry,
    store: &FixtureStore,
) -> Result<String, QueryGenError> {
    let mut store = store.clone();
    let mut stack: Vec<Value> = Vec::with_capacity(template.solution_path.len());
    for step in &template.solution_path {
        let spec = registry
            .get(&step.tool_name)
            .ok_or_else(|| QueryGenError::UnknownTool(step.tool_name.clone()))?;
        let mut args = Map::new();
        for (param, arg) in &step.arguments {
            let value = match arg {
                ArgValue::Literal(v) => v.clone(),
                ArgValue::Resolve => resolve_argument(param, values, &stack)?,
            };
            args.insert(param.clone(), value);
        }
        let faults = spec.validate_args(&args, Strictness::Strict);
        if !faults.is_empty() {
            let detail: Vec<String> = faults.iter().map(ToString::to_string).collect();
            return Err(QueryGenError::ToolExecutionFailure {
                tool: step.tool_name.clone(),
                message: detail.join("; "),
            });
        }
        let result = spec.execute(&args, &mut store);
        if let Some(message) = result.error_message() {
            return Err(QueryGenError::ToolExecutionFailure {
                tool: step.tool_name.clone(),
                message: message.to_string(),
            });
        }
        stack.push(result.payload);
    }
    let last = stack.last().ok_or_else(|| QueryGenError::InvalidTemplate {
        template_id: template.template_id.clone(),
        faults: vec![super::TemplateFault::EmptySolutionPath],
    })?;
    let path = template.extraction_path(values)?;
    let answer = canonical_text(path.apply(last)?);
    if answer.is_empty() {
        return Err(QueryGenError::EmptyGroundTruth(template.template_id.clone()));
    }
    Ok(answer)
}

/// Required tools (or the solution tools when none are declared), then
/// `distractor_count` seeded distractors, then the terminal tool.
pub fn assemble_toolset(
    template: &QueryTemplate,
    registry: &ToolRegistry,
    seed: u64,
) -> Result<Vec<String>, QueryGenError> {
    let policy = &template.toolset_policy;
    let required: Vec<String> = if policy.required_tools.is_empty() {
        template.solution_tools().into_iter().map(String::from).collect()
    } else {
        policy.required_tools.clone()
    };
    let mut seen = BTreeSet::new();
    let mut tools = Vec::new();
    for name in required {
        if !registry.contains(&name) {
            return Err(QueryGenError::UnknownRequiredTool(name));
        }
        if registry.is_terminal(&name) && !policy.include_terminal {
            continue;
        }
        if seen.insert(name.clone()) {
            tools.push(name);
        }
    }

    // distractors never include a solution tool or a declared alternative,
    // so a template that swaps tools out really does go without them
    let mut excluded: BTreeSet<&str> = template.solution_tools().into_iter().collect();
    excluded.extend(policy.alternatives.values().map(|a| a.tool_name.as_str()));
    let mut pool: Vec<&str> = registry
        .names()
        .filter(|n| !registry.is_terminal(n) && !seen.contains(*n) && !excluded.contains(n))
        .collect();
    if pool.len() < policy.distractor_count {
        return Err(QueryGenError::InsufficientDistractors {
            needed: policy.distractor_count,
            available: pool.len(),
        });
    }
    let mut rng = rng_from_seed(derive_seed(seed, &["toolset"], &[]));
    pool.shuffle(&mut rng);
    for name in pool.into_iter().take(policy.distractor_count) {
        seen.insert(name.to_string());
        tools.push(name.to_string());
    }

    if policy.include_terminal {
        let terminal = registry
            .terminal_tool()
            .ok_or(QueryGenError::MissingTerminalTool)?;
        if !seen.contains(&terminal.name) {
            tools.push(terminal.name.clone());
        }
    }
    Ok(tools)
}

pub struct GenerationContext<'a> {
    pub provider: &'a dyn ValueProvider,
    pub paraphraser: &'a dyn Paraphraser,
    pub registry: &'a ToolRegistry,
    pub store: &'a FixtureStore,
}

/// Consecutive duplicate draws tolerated before a template with an unknown
/// value domain is treated as exhausted.
const MAX_COLLISIONS: usize = 1_000;

struct TemplateCursor<'t> {
    template: &'t QueryTemplate,
    combinations: Option<usize>,
    used: BTreeSet<String>,
    produced: usize,
    attempts: u64,
}

impl TemplateCursor<'_> {
    fn exhausted_by_count(&self) -> bool {
        self.combinations.is_some_and(|c| self.used.len() >= c)
    }
}

/// Generates `count` unique instances, cycling through the templates in
/// order. Templates whose value combinations run out drop out of the cycle.
pub fn generate_instances(
    templates: &[QueryTemplate],
    count: usize,
    ctx: &GenerationContext<'_>,
    seed: u64,
) -> Result<Vec<QueryInstance>, QueryGenError> {
    if count == 0 {
        return Err(QueryGenError::InvalidCount);
    }
    let mut ids = BTreeSet::new();
    for t in templates {
        if !ids.insert(t.template_id.as_str()) {
            return Err(QueryGenError::DuplicateTemplateId(t.template_id.clone()));
        }
    }
    let mut cursors: Vec<TemplateCursor> = templates
        .iter()
        .map(|t| {
            let combinations = t.placeholders.values().try_fold(1usize, |acc, spec| {
                ctx.provider
                    .domain_size(t, spec)
                    .map(|n| acc.saturating_mul(n))
            });
            TemplateCursor {
                template: t,
                combinations,
                used: BTreeSet::new(),
                produced: 0,
                attempts: 0,
            }
        })
        .collect();

    let mut instances = Vec::with_capacity(count);
    let mut active: Vec<usize> = (0..cursors.len()).collect();
    let mut turn = 0usize;
    while instances.len() < count && !active.is_empty() {
        let slot = turn % active.len();
        let cursor = &mut cursors[active[slot]];
        match next_instance(cursor, ctx, seed)? {
            Some(instance) => {
                instances.push(instance);
                turn = slot + 1;
            }
            None => {
                active.remove(slot);
                turn = slot;
            }
        }
    }
    if instances.len() < count {
        return Err(QueryGenError::UniquenessExhausted {
            requested: count,
            achieved: instances.len(),
            partial: Box::new(instances),
        });
    }
    Ok(instances)
}

fn next_instance(
    cursor: &mut TemplateCursor<'_>,
    ctx: &GenerationContext<'_>,
    seed: u64,
) -> Result<Option<QueryInstance>, QueryGenError> {
    let template = cursor.template;
    let collision_cap = cursor
        .combinations
        .map_or(MAX_COLLISIONS, |c| c.saturating_mul(64).max(64));
    let mut collisions = 0;
    loop {
        if cursor.exhausted_by_count() || collisions >= collision_cap {
            return Ok(None);
        }
        let instance_seed = derive_seed(seed, &["instance", &template.template_id], &[cursor.attempts]);
        cursor.attempts += 1;
        let values = sample_placeholders(
            template,
            ctx.provider,
            derive_seed(instance_seed, &["placeholders"], &[]),
        )?;
        let key = serde_json::to_string(&values).expect("values serialize");
        if !cursor.used.insert(key) {
            collisions += 1;
            continue;
        }
        let query_text = render_query(template, &values, ctx.paraphraser)?;
        let available_tools = assemble_toolset(template, ctx.registry, instance_seed)?;
        let terminals = available_tools
            .iter()
            .filter(|t| ctx.registry.is_terminal(t))
            .count();
        if terminals != 1 {
            return Err(QueryGenError::MissingTerminalTool);
        }
        let ground_truth = compute_ground_truth(template, &values, ctx.registry, ctx.store)?;
        let instance = QueryInstance {
            instance_id: format!("{}-{:03}", template.template_id, cursor.produced),
            template_id: template.template_id.clone(),
            placeholder_values: values,
            query_text,
            available_tools,
            ground_truth,
            seed: instance_seed,
        };
        cursor.produced += 1;
        return Ok(Some(instance));
    }
}
