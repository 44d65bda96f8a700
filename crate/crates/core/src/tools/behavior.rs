use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{Args, FixtureStore, ToolResult, ToolSpec, FINAL_ANSWER_PARAM};

/// What a tool does when called. Parameter-to-field maps (`match`, `set`)
/// name an argument on the left and a record field on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Behavior {
    /// Ends the episode, echoing `final_answer`.
    Terminal,
    /// Returns a fixed document.
    Constant { value: Value },
    /// First record whose fields equal the given arguments.
    Lookup {
        table: String,
        #[serde(rename = "match")]
        matches: BTreeMap<String, String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        fields: Vec<String>,
    },
    /// All matching records under a `results` key. Errors when nothing matches.
    Search {
        table: String,
        #[serde(rename = "match")]
        matches: BTreeMap<String, String>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        contains: bool,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        fields: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<usize>,
    },
    /// Count or numeric reduction over matching records.
    Aggregate {
        table: String,
        #[serde(rename = "match")]
        matches: BTreeMap<String, String>,
        op: AggregateOp,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<String>,
    },
    /// Overwrites fields of the first matching record in the episode store.
    Update {
        table: String,
        #[serde(rename = "match")]
        matches: BTreeMap<String, String>,
        set: BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateOp {
    Count,
    Sum,
    Mean,
    Min,
    Max,
}

impl AggregateOp {
    fn as_str(self) -> &'static str {
        match self {
            AggregateOp::Count => "count",
            AggregateOp::Sum => "sum",
            AggregateOp::Mean => "mean",
            AggregateOp::Min => "min",
            AggregateOp::Max => "max",
        }
    }
}

/// Field equality used by lookups: text compares case-insensitively after
/// trimming, numbers compare by value.
pub(crate) fn values_match(arg: &Value, field: &Value) -> bool {
    match (arg, field) {
        (Value::String(a), Value::String(b)) => a.trim().eq_ignore_ascii_case(b.trim()),
        (Value::Number(a), Value::Number(b)) => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x == y,
            _ => a == b,
        },
        _ => arg == field,
    }
}

fn value_contains(arg: &Value, field: &Value) -> bool {
    match (arg, field) {
        (Value::String(a), Value::String(b)) => b
            .to_lowercase()
            .contains(a.trim().to_lowercase().as_str()),
        (a, Value::Array(items)) => items.iter().any(|item| values_match(a, item)),
        _ => values_match(arg, field),
    }
}

fn describe_criteria(args: &Args, matches: &BTreeMap<String, String>) -> String {
    matches
        .iter()
        .map(|(param, field)| {
            let shown = match args.get(param) {
                Some(Value::String(s)) => format!("\"{s}\""),
                Some(v) => v.to_string(),
                None => "?".to_string(),
            };
            format!("{field}={shown}")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn check_present(args: &Args, params: impl IntoIterator<Item = String>) -> Result<(), String> {
    for param in params {
        if args.get(&param).is_none_or(Value::is_null) {
            return Err(format!("missing argument \"{param}\""));
        }
    }
    Ok(())
}

fn record_matches(
    record: &Value,
    args: &Args,
    matches: &BTreeMap<String, String>,
    contains: bool,
) -> bool {
    matches.iter().all(|(param, field)| {
        match (args.get(param), record.get(field)) {
            (Some(a), Some(f)) if contains => value_contains(a, f),
            (Some(a), Some(f)) => values_match(a, f),
            _ => false,
        }
    })
}

fn project(record: &Value, fields: &[String]) -> Value {
    if fields.is_empty() {
        return record.clone();
    }
    let mut out = Map::new();
    for field in fields {
        if let Some(v) = record.get(field) {
            out.insert(field.clone(), v.clone());
        }
    }
    Value::Object(out)
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn number_value(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        json!(x as i64)
    } else {
        json!(x)
    }
}

pub(super) fn run(spec: &ToolSpec, args: &Args, store: &mut FixtureStore) -> ToolResult {
    match &spec.behavior {
        Behavior::Terminal => match args.get(FINAL_ANSWER_PARAM) {
            Some(answer) => {
                let mut result = ToolResult::ok(json!({ FINAL_ANSWER_PARAM: answer }));
                result.terminal = true;
                result
            }
            None => ToolResult::error(format!(
                "{}: missing argument \"{FINAL_ANSWER_PARAM}\"",
                spec.name
            )),
        },
        Behavior::Constant { value } => ToolResult::ok(value.clone()),
        Behavior::Lookup { table, matches, fields } => {
            if let Err(e) = check_present(args, matches.keys().cloned()) {
                return ToolResult::error(format!("{}: {e}", spec.name));
            }
            let Some(rows) = store.table(table) else {
                return ToolResult::error(format!("{}: no data source \"{table}\"", spec.name));
            };
            match rows.iter().find(|r| record_matches(r, args, matches, false)) {
                Some(record) => ToolResult::ok(project(record, fields)),
                None => ToolResult::error(format!(
                    "{}: no {table} record found with {}",
                    spec.name,
                    describe_criteria(args, matches)
                )),
            }
        }
        Behavior::Search { table, matches, contains, fields, limit } => {
            if let Err(e) = check_present(args, matches.keys().cloned()) {
                return ToolResult::error(format!("{}: {e}", spec.name));
            }
            let Some(rows) = store.table(table) else {
                return ToolResult::error(format!("{}: no data source \"{table}\"", spec.name));
            };
            let hits: Vec<Value> = rows
                .iter()
                .filter(|r| record_matches(r, args, matches, *contains))
                .take(limit.unwrap_or(usize::MAX))
                .map(|r| project(r, fields))
                .collect();
            if hits.is_empty() {
                return ToolResult::error(format!(
                    "{}: no {table} records found for {}",
                    spec.name,
                    describe_criteria(args, matches)
                ));
            }
            ToolResult::ok(json!({ "results": hits }))
        }
        Behavior::Aggregate { table, matches, op, field } => {
            if let Err(e) = check_present(args, matches.keys().cloned()) {
                return ToolResult::error(format!("{}: {e}", spec.name));
            }
            let Some(rows) = store.table(table) else {
                return ToolResult::error(format!("{}: no data source \"{table}\"", spec.name));
            };
            let selected: Vec<&Value> = rows
                .iter()
                .filter(|r| record_matches(r, args, matches, false))
                .collect();
            let mut out = Map::new();
            for (param, field_name) in matches {
                if let Some(v) = args.get(param) {
                    out.insert(field_name.clone(), v.clone());
                }
            }
            out.insert("count".into(), json!(selected.len()));
            if *op != AggregateOp::Count {
                let Some(field) = field else {
                    return ToolResult::error(format!("{}: aggregate has no field", spec.name));
                };
                let numbers: Vec<f64> = selected
                    .iter()
                    .filter_map(|r| r.get(field).and_then(Value::as_f64))
                    .collect();
                if numbers.is_empty() {
                    return ToolResult::error(format!(
                        "{}: no {table} records found with {}",
                        spec.name,
                        describe_criteria(args, matches)
                    ));
                }
                let value = match op {
                    AggregateOp::Sum => numbers.iter().sum(),
                    AggregateOp::Mean => numbers.iter().sum::<f64>() / numbers.len() as f64,
                    AggregateOp::Min => numbers.iter().copied().fold(f64::INFINITY, f64::min),
                    AggregateOp::Max => numbers.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    AggregateOp::Count => unreachable!(),
                };
                out.insert(format!("{}_{field}", op.as_str()), number_value(round2(value)));
            }
            ToolResult::ok(Value::Object(out))
        }
        Behavior::Update { table, matches, set } => {
            if let Err(e) = check_present(args, matches.keys().chain(set.keys()).cloned()) {
                return ToolResult::error(format!("{}: {e}", spec.name));
            }
            let criteria = describe_criteria(args, matches);
            let Some(rows) = store.table_mut(table) else {
                return ToolResult::error(format!("{}: no data source \"{table}\"", spec.name));
            };
            let Some(record) = rows
                .iter_mut()
                .find(|r| record_matches(r, args, matches, false))
            else {
                return ToolResult::error(format!(
                    "{}: no {table} record found with {criteria}",
                    spec.name
                ));
            };
            if let Some(obj) = record.as_object_mut() {
                for (param, field) in set {
                    obj.insert(field.clone(), args[param].clone());
                }
            }
            ToolResult::ok(record.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tools::{ParamSpec, ParamType, ToolStatus};

    fn store() -> FixtureStore {
        let mut tables = BTreeMap::new();
        tables.insert(
            "movies".to_string(),
            vec![
                json!({"id": 1, "title": "Alpha", "genres": "Action, Drama", "score": 7.0}),
                json!({"id": 2, "title": "Beta", "genres": "Comedy", "score": 8.0}),
                json!({"id": 3, "title": "Alpha Two", "genres": "Drama", "score": 6.5}),
            ],
        );
        FixtureStore::from_tables(0, tables)
    }

    fn tool(behavior: Behavior) -> ToolSpec {
        ToolSpec {
            name: "t".into(),
            description: String::new(),
            params: vec![ParamSpec::required("q", ParamType::Text, "")],
            behavior,
            is_terminal: false,
        }
    }

    fn args(v: Value) -> Args {
        v.as_object().unwrap().clone()
    }

    fn m(param: &str, field: &str) -> BTreeMap<String, String> {
        BTreeMap::from([(param.to_string(), field.to_string())])
    }

    #[test]
    fn lookup_is_case_insensitive_and_projects() {
        let spec = tool(Behavior::Lookup {
            table: "movies".into(),
            matches: m("q", "title"),
            fields: vec!["id".into()],
        });
        let r = spec.execute(&args(json!({"q": " alpha "})), &mut store());
        assert_eq!(r.payload, json!({"id": 1}));
        let miss = spec.execute(&args(json!({"q": "Gamma"})), &mut store());
        assert_eq!(miss.status, ToolStatus::Error);
        assert!(miss.error_message().unwrap().contains("Gamma"));
    }

    #[test]
    fn numeric_lookup_ignores_integer_float_distinction() {
        assert!(values_match(&json!(155), &json!(155.0)));
        assert!(!values_match(&json!("155"), &json!(155)));
    }

    #[test]
    fn search_contains_and_limit() {
        let spec = tool(Behavior::Search {
            table: "movies".into(),
            matches: m("q", "genres"),
            contains: true,
            fields: vec!["title".into()],
            limit: Some(1),
        });
        let r = spec.execute(&args(json!({"q": "drama"})), &mut store());
        assert_eq!(r.payload, json!({"results": [{"title": "Alpha"}]}));
    }

    #[test]
    fn aggregate_mean_rounds() {
        let spec = tool(Behavior::Aggregate {
            table: "movies".into(),
            matches: m("q", "genres"),
            op: AggregateOp::Mean,
            field: Some("score".into()),
        });
        let r = spec.execute(&args(json!({"q": "Drama"})), &mut store());
        assert_eq!(r.payload, json!({"genres": "Drama", "count": 1, "mean_score": 6.5}));
        let count = tool(Behavior::Aggregate {
            table: "movies".into(),
            matches: m("q", "genres"),
            op: AggregateOp::Count,
            field: None,
        });
        let r = count.execute(&args(json!({"q": "Horror"})), &mut store());
        assert_eq!(r.payload["count"], json!(0));
    }

    #[test]
    fn update_mutates_only_the_given_store() {
        let mut spec = tool(Behavior::Update {
            table: "movies".into(),
            matches: m("q", "title"),
            set: m("g", "genres"),
        });
        spec.params.push(ParamSpec::required("g", ParamType::Text, ""));
        let original = store();
        let mut episode = original.clone();
        let r = spec.execute(&args(json!({"q": "Beta", "g": "Horror"})), &mut episode);
        assert!(r.is_ok());
        assert_eq!(episode.table("movies").unwrap()[1]["genres"], json!("Horror"));
        assert_eq!(original.table("movies").unwrap()[1]["genres"], json!("Comedy"));
    }

    #[test]
    fn missing_arguments_fail_softly() {
        let spec = tool(Behavior::Lookup {
            table: "movies".into(),
            matches: m("q", "title"),
            fields: vec![],
        });
        let r = spec.execute(&Args::new(), &mut store());
        assert_eq!(r.status, ToolStatus::Error);
    }
}
