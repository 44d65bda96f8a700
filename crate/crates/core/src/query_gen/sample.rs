use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::template::{substitute_markers, PlaceholderSpec, QueryTemplate};
use super::QueryGenError;
use crate::seed::rng_from_seed;

/// Supplies placeholder values.
pub trait ValueProvider: Send + Sync {
    fn provide(
        &self,
        template: &QueryTemplate,
        spec: &PlaceholderSpec,
        rng: &mut ChaCha8Rng,
    ) -> Result<Value, QueryGenError>;

    /// Number of distinct values the provider can return for `spec`, when
    /// that is known. Used to detect when unique combinations run out.
    fn domain_size(&self, _template: &QueryTemplate, _spec: &PlaceholderSpec) -> Option<usize> {
        None
    }
}

/// Uniform sampling from candidate pools. Pools come from the template's
/// metadata unless overridden, either per placeholder name or per
/// `template_id.placeholder`.
#[derive(Debug, Clone, Default)]
pub struct PoolProvider {
    overrides: BTreeMap<String, Vec<Value>>,
}

impl PoolProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_pool(mut self, key: impl Into<String>, pool: Vec<Value>) -> Self {
        self.overrides.insert(key.into(), pool);
        self
    }

    fn pool<'a>(&'a self, template: &QueryTemplate, spec: &'a PlaceholderSpec) -> &'a [Value] {
        let scoped = format!("{}.{}", template.template_id, spec.name);
        self.overrides
            .get(&scoped)
            .or_else(|| self.overrides.get(&spec.name))
            .map(Vec::as_slice)
            .or(spec.candidate_pool.as_deref())
            .unwrap_or(&[])
    }
}

impl ValueProvider for PoolProvider {
    fn provide(
        &self,
        template: &QueryTemplate,
        spec: &PlaceholderSpec,
        rng: &mut ChaCha8Rng,
    ) -> Result<Value, QueryGenError> {
        self.pool(template, spec)
            .choose(rng)
            .cloned()
            .ok_or_else(|| QueryGenError::EmptyPool(spec.name.clone()))
    }

    fn domain_size(&self, template: &QueryTemplate, spec: &PlaceholderSpec) -> Option<usize> {
        let mut distinct: Vec<String> =
            self.pool(template, spec).iter().map(Value::to_string).collect();
        distinct.sort();
        distinct.dedup();
        Some(distinct.len())
    }
}

/// Rewrites a rendered query (for diversity). Must be deterministic for a
/// given input if generation is to be reproducible.
pub trait Paraphraser: Send + Sync {
    fn paraphrase(&self, text: &str) -> Result<String, QueryGenError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityParaphraser;

impl Paraphraser for IdentityParaphraser {
    fn paraphrase(&self, text: &str) -> Result<String, QueryGenError> {
        Ok(text.to_string())
    }
}

/// Draws one value per placeholder, in name order, from a stream seeded by `seed`.
pub fn sample_placeholders(
    template: &QueryTemplate,
    provider: &dyn ValueProvider,
    seed: u64,
) -> Result<BTreeMap<String, Value>, QueryGenError> {
    let mut rng = rng_from_seed(seed);
    let mut values = BTreeMap::new();
    for (name, spec) in &template.placeholders {
        let value = provider.provide(template, spec, &mut rng)?;
        if !spec.accepts(&value) {
            return Err(QueryGenError::TypeMismatch {
                placeholder: name.clone(),
                expected: spec.value_type.to_string(),
                value: value.to_string(),
            });
        }
        values.insert(name.clone(), value);
    }
    Ok(values)
}

pub fn render_query(
    template: &QueryTemplate,
    values: &BTreeMap<String, Value>,
    paraphraser: &dyn Paraphraser,
) -> Result<String, QueryGenError> {
    let filled = substitute_markers(&template.template_text, values)?;
    paraphraser.paraphrase(&filled)
}
