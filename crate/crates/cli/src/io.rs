//! JSONL files with a leading metadata record.

use std::fs;
use std::path::Path;

use agentsynth::trajectory::{FilterVerdict, Trajectory};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

pub const METADATA_RECORD: &str = "metadata";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    Instances,
    Trajectories,
    Report,
    Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub record_type: String,
    pub kind: FileKind,
    pub seed: u64,
    pub config_hash: String,
    /// Hash of the fixture store the records were computed against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_digest: Option<String>,
    pub config: RunConfig,
}

impl Metadata {
    pub fn new(kind: FileKind, config: &RunConfig) -> Self {
        Self {
            record_type: METADATA_RECORD.to_string(),
            kind,
            seed: config.seed,
            config_hash: config.hash(),
            fixture_digest: None,
            config: config.clone(),
        }
    }

    pub fn with_fixture_digest(mut self, digest: String) -> Self {
        self.fixture_digest = Some(digest);
        self
    }
}

/// One line of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    #[serde(flatten)]
    pub trajectory: Trajectory,
    pub verdict: FilterVerdict,
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn push_line<T: Serialize>(out: &mut String, record: &T) {
    out.push_str(&serde_json::to_string(record).expect("record serializes"));
    out.push('\n');
}

/// Writes a metadata line followed by one line per record.
pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    meta: &Metadata,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<(), CliError> {
    let mut out = String::new();
    push_line(&mut out, meta);
    for record in records {
        push_line(&mut out, record);
    }
    write_text(path, &out)
}

/// Writes records only, with no metadata line.
pub fn write_plain_jsonl<'a, T: Serialize + 'a>(path: &Path, records: impl IntoIterator<Item = &'a T>) -> Result<(), CliError> {
    let mut out = String::new();
    for record in records {
        push_line(&mut out, record);
    }
    write_text(path, &out)
}

/// Reads a file written by [`write_jsonl`]. Blank lines are skipped; any
/// other unparseable line fails with its 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path, kind: FileKind) -> Result<(Metadata, Vec<T>), CliError> {
    let raw = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let malformed = |line: usize, message: String| CliError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = raw.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (first, head) = lines.next().ok_or_else(|| malformed(1, "missing metadata record".to_string()))?;
    let meta: Metadata = serde_json::from_str(head).map_err(|e| malformed(first + 1, format!("bad metadata record: {e}")))?;
    if meta.record_type != METADATA_RECORD {
        return Err(malformed(first + 1, format!("expected a metadata record, found {:?}", meta.record_type)));
    }
    if meta.kind != kind {
        return Err(malformed(first + 1, format!("expected a {kind:?} file, found {:?}", meta.kind)));
    }
    let records = lines
        .map(|(i, line)| serde_json::from_str(line).map_err(|e| malformed(i + 1, e.to_string())))
        .collect::<Result<Vec<T>, _>>()?;
    Ok((meta, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use agentsynth::query_gen::QueryInstance;

    fn instance(id: &str) -> QueryInstance {
        QueryInstance {
            instance_id: id.to_string(),
            template_id: "t".to_string(),
            placeholder_values: Default::default(),
            query_text: "q".to_string(),
            available_tools: vec!["Finish".to_string()],
            ground_truth: "g".to_string(),
            seed: 3,
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/i.jsonl");
        let meta = Metadata::new(FileKind::Instances, &RunConfig::default());
        let items = vec![instance("a"), instance("b")];
        write_jsonl(&path, &meta, &items).unwrap();
        let (back_meta, back): (Metadata, Vec<QueryInstance>) = read_jsonl(&path, FileKind::Instances).unwrap();
        assert_eq!(back_meta, meta);
        assert_eq!(back, items);
    }

    #[test]
    fn reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.jsonl");
        let meta = Metadata::new(FileKind::Instances, &RunConfig::default());
        write_jsonl(&path, &meta, &[instance("a")]).unwrap();
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{\"instance_id\": 5}\n");
        fs::write(&path, text).unwrap();
        match read_jsonl::<QueryInstance>(&path, FileKind::Instances) {
            Err(CliError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_kind_and_missing_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.jsonl");
        write_jsonl::<QueryInstance>(&path, &Metadata::new(FileKind::Report, &RunConfig::default()), &[]).unwrap();
        assert!(matches!(read_jsonl::<QueryInstance>(&path, FileKind::Instances), Err(CliError::Malformed { line: 1, .. })));
        fs::write(&path, "").unwrap();
        assert!(matches!(read_jsonl::<QueryInstance>(&path, FileKind::Instances), Err(CliError::Malformed { line: 1, .. })));
    }
}
