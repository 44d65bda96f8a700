use super::template::{parse_templates, QueryTemplate};

/// Thirty templates over the bundled tool catalog and fixture identities.
pub const BUNDLED_TEMPLATES_JSON: &str = include_str!("../../assets/templates.json");

pub fn bundled_templates() -> Vec<QueryTemplate> {
    parse_templates(BUNDLED_TEMPLATES_JSON).expect("bundled templates are valid")
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::query_gen::{compute_ground_truth, generate_instances, GenerationContext, IdentityParaphraser, PoolProvider};
    use crate::tools::{FixtureStore, ToolRegistry};
    use serde_json::Value;

    fn combinations(t: &QueryTemplate) -> Vec<BTreeMap<String, Value>> {
        let mut out = vec![BTreeMap::new()];
        for (name, spec) in &t.placeholders {
            let pool = spec.candidate_pool.clone().unwrap_or_default();
            out = out
                .into_iter()
                .flat_map(|partial| {
                    pool.iter().map(move |v| {
                        let mut next = partial.clone();
                        next.insert(name.clone(), v.clone());
                        next
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn thirty_templates_all_tools_registered() {
        let templates = bundled_templates();
        assert_eq!(templates.len(), 30);
        let registry = ToolRegistry::bundled();
        for t in &templates {
            for tool in t.solution_tools() {
                assert!(registry.contains(tool), "{}: {tool}", t.template_id);
            }
        }
    }

    #[test]
    fn every_combination_has_a_ground_truth() {
        let registry = ToolRegistry::bundled();
        for fixture_seed in [0, 1, 42, 7777] {
            let store = FixtureStore::generate(fixture_seed);
            for t in bundled_templates() {
                for values in combinations(&t) {
                    if let Err(e) = compute_ground_truth(&t, &values, &registry, &store) {
                        panic!("{} {values:?} seed {fixture_seed}: {e}", t.template_id);
                    }
                }
            }
        }
    }

    #[test]
    fn four_hundred_unique_instances() {
        let registry = ToolRegistry::bundled();
        let store = FixtureStore::generate(42);
        let provider = PoolProvider::new();
        let ctx = GenerationContext { provider: &provider, paraphraser: &IdentityParaphraser, registry: &registry, store: &store };
        let instances = generate_instances(&bundled_templates(), 400, &ctx, 0).unwrap();
        assert_eq!(instances.len(), 400);
        let ids: std::collections::BTreeSet<_> = instances.iter().map(|i| &i.instance_id).collect();
        assert_eq!(ids.len(), 400);
    }
}
