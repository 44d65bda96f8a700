use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value;

use super::QueryGenError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathSegment {
    Key(String),
    Index(usize),
}

/// A dot/bracket path such as `results[0].id` or `forecast[1]["high_c"]`.
/// The empty path selects the whole document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExtractionPath {
    segments: Vec<PathSegment>,
}

impl ExtractionPath {
    pub fn whole() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn parse(expr: &str) -> Result<Self, QueryGenError> {
        let bad = |why: &str| QueryGenError::InvalidExtractionPath(format!("{expr:?}: {why}"));
        let chars: Vec<char> = expr.trim().chars().collect();
        let mut segments = Vec::new();
        let mut i = 0;
        let mut expect_segment = true;
        while i < chars.len() {
            match chars[i] {
                '.' => {
                    if expect_segment {
                        return Err(bad("empty segment"));
                    }
                    expect_segment = true;
                    i += 1;
                }
                '[' => {
                    let close = chars[i..]
                        .iter()
                        .position(|&c| c == ']')
                        .map(|p| p + i)
                        .ok_or_else(|| bad("unclosed '['"))?;
                    let inner: String = chars[i + 1..close].iter().collect();
                    let inner = inner.trim();
                    let segment = if let Some(quoted) = inner
                        .strip_prefix('"')
                        .and_then(|s| s.strip_suffix('"'))
                    {
                        PathSegment::Key(quoted.to_string())
                    } else {
                        PathSegment::Index(inner.parse().map_err(|_| bad("index must be a non-negative integer"))?)
                    };
                    segments.push(segment);
                    expect_segment = false;
                    i = close + 1;
                }
                _ => {
                    if !expect_segment {
                        return Err(bad("expected '.' or '['"));
                    }
                    let start = i;
                    while i < chars.len() && chars[i] != '.' && chars[i] != '[' {
                        i += 1;
                    }
                    let key: String = chars[start..i].iter().collect();
                    segments.push(PathSegment::Key(key.trim().to_string()));
                    expect_segment = false;
                }
            }
        }
        if expect_segment && !segments.is_empty() {
            return Err(bad("trailing '.'"));
        }
        Ok(Self { segments })
    }

    pub fn apply<'a>(&self, doc: &'a Value) -> Result<&'a Value, QueryGenError> {
        let mut current = doc;
        for segment in &self.segments {
            let next = match segment {
                PathSegment::Key(k) => current.get(k.as_str()),
                PathSegment::Index(n) => current.get(*n),
            };
            current = next.ok_or_else(|| QueryGenError::ExtractionPathMissing {
                path: self.to_string(),
                document: truncate(&doc.to_string(), 200),
            })?;
        }
        Ok(current)
    }
}

impl fmt::Display for ExtractionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, segment) in self.segments.iter().enumerate() {
            match segment {
                PathSegment::Key(k) if k.chars().all(|c| c.is_alphanumeric() || c == '_') => {
                    if i > 0 {
                        f.write_str(".")?;
                    }
                    f.write_str(k)?;
                }
                PathSegment::Key(k) => write!(f, "[\"{k}\"]")?,
                PathSegment::Index(n) => write!(f, "[{n}]")?,
            }
        }
        Ok(())
    }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((idx, _)) => format!("{}...", &s[..idx]),
        None => s.to_string(),
    }
}

/// Canonical answer text: scalars bare, strings unquoted, documents as
/// compact JSON with sorted keys; surrounding whitespace trimmed.
pub fn canonical_text(value: &Value) -> String {
    match value {
        Value::String(s) => s.trim().to_string(),
        // serde_json maps are BTreeMap-backed, so key order is already stable
        other => other.to_string().trim().to_string(),
    }
}

/// Depth-first search for `key`: an object's own entries are checked before
/// descending into its children, children are visited in key order, arrays
/// in index order.
pub fn find_key<'a>(doc: &'a Value, key: &str) -> Option<&'a Value> {
    match doc {
        Value::Object(map) => map
            .get(key)
            .or_else(|| map.values().find_map(|child| find_key(child, key))),
        Value::Array(items) => items.iter().find_map(|child| find_key(child, key)),
        _ => None,
    }
}

/// Resolves a solution-step argument: placeholder values first, then the
/// response stack newest-first (last element is newest).
pub fn resolve_argument(
    name: &str,
    values: &BTreeMap<String, Value>,
    response_stack: &[Value],
) -> Result<Value, QueryGenError> {
    if let Some(v) = values.get(name) {
        return Ok(v.clone());
    }
    response_stack
        .iter()
        .rev()
        .find_map(|doc| find_key(doc, name))
        .cloned()
        .ok_or_else(|| QueryGenError::UnresolvableArgument(name.to_string()))
}
