use std::fs;
use std::path::{Path, PathBuf};

use agentsynth::agents::RemoteConfig;
use agentsynth::env::{EnvConfig, Monitoring, DEFAULT_MAX_STEPS, DEFAULT_OBSERVATION_BYTES};
use agentsynth::tools::Strictness;
use agentsynth::trajectory::{FilterOptions, MatchMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io::Metadata;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    #[default]
    Oracle,
    Scripted,
    /// The oracle with seeded fault injection.
    Faulty,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Template document; the bundled templates when absent.
    pub templates: Option<PathBuf>,
    /// Tool catalog; the bundled catalog when absent.
    pub tools: Option<PathBuf>,
    /// Fixture store JSON; generated from `fixture_seed` when absent.
    pub fixtures: Option<PathBuf>,
    pub instances: Option<PathBuf>,
    pub trajectories: Vec<PathBuf>,
    /// Not part of the run identity, so it is never serialized.
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Optional report file for `explore`; also outside the run identity.
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

/// Everything that determines a run's output. Embedded in the metadata
/// record of every file the run writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub fixture_seed: u64,
    pub count: usize,
    pub max_steps: usize,
    pub match_mode: MatchMode,
    pub strict_args: bool,
    pub action_monitoring: bool,
    pub trajectory_monitoring: bool,
    pub parallelism: usize,
    pub target_accepted: usize,
    pub attempt_budget: Option<usize>,
    pub max_observation_bytes: usize,
    pub elide_error_steps: bool,
    pub agent: AgentKind,
    /// Per-step fault probability for the faulty agent.
    pub fault_rate: f64,
    /// JSON array of raw actions for the scripted agent.
    pub script: Option<PathBuf>,
    /// Action samples drawn for stats; all actions when absent.
    pub samples: Option<usize>,
    pub remote: RemoteConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            fixture_seed: 42,
            count: 400,
            max_steps: DEFAULT_MAX_STEPS,
            match_mode: MatchMode::default(),
            strict_args: true,
            action_monitoring: true,
            trajectory_monitoring: true,
            parallelism: 1,
            target_accepted: 500,
            attempt_budget: None,
            max_observation_bytes: DEFAULT_OBSERVATION_BYTES,
            elide_error_steps: false,
            agent: AgentKind::Oracle,
            fault_rate: 0.3,
            script: None,
            samples: None,
            remote: RemoteConfig::default(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML config file, or the metadata record at the head of a
    /// previous output file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        if raw.trim_start().starts_with('{') {
            let first = raw.lines().next().unwrap_or_default();
            let meta: Metadata = serde_json::from_str(first).map_err(|e| CliError::Malformed {
                path: path.to_path_buf(),
                line: 1,
                message: e.to_string(),
            })?;
            return Ok(meta.config);
        }
        toml::from_str(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Hex SHA-256 of the serialized config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            max_steps: self.max_steps,
            strictness: if self.strict_args { Strictness::Strict } else { Strictness::Lenient },
            monitoring: Monitoring {
                action_monitoring: self.action_monitoring,
                trajectory_monitoring: self.trajectory_monitoring,
            },
            max_observation_bytes: self.max_observation_bytes,
        }
    }

    pub fn filter_options(&self) -> FilterOptions {
        FilterOptions {
            mode: self.match_mode,
            trajectory_monitoring: self.trajectory_monitoring,
        }
    }

    pub fn output(&self) -> Result<&Path, CliError> {
        self.paths
            .output
            .as_deref()
            .ok_or_else(|| CliError::Usage("--out is required".to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: RunConfig = toml::from_str("seed = 9\n[remote]\nmodel = \"m\"\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.remote.model, "m");
        assert_eq!(cfg.remote.api_key_env, RemoteConfig::default().api_key_env);
        assert_eq!(cfg.count, 400);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
    }

    #[test]
    fn output_path_does_not_change_the_hash() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.paths.output = Some("elsewhere.jsonl".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = RunConfig {
            attempt_budget: Some(7),
            ..RunConfig::default()
        };
        cfg.paths.templates = Some("t.json".into());
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
