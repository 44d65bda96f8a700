//! The `agentsynth` command line: instance generation, exploration,
//! filtering, dataset export and error statistics over JSONL files.
//!
//! Configuration precedence is flags, then the `--config` file, then
//! defaults. Exit codes: 0 ok, 1 domain error, 2 usage error.

pub mod commands;
pub mod config;
pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use agentsynth::agents::AgentError;
use agentsynth::analysis::AnalysisError;
use agentsynth::query_gen::QueryGenError;
use agentsynth::tools::RegistryError;
use agentsynth::trajectory::{MatchMode, TrajectoryError};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{
    cmd_catalog, cmd_explore, cmd_export, cmd_filter, cmd_gen_instances, cmd_stats, CommandOutput,
};
pub use config::{AgentKind, Paths, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("target not reached: {0}")]
    TargetUnreachable(String),
    #[error(transparent)]
    QueryGen(#[from] QueryGenError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::QueryGen(QueryGenError::InvalidCount) => 2,
            _ => 1,
        }
    }
}

fn parse_match_mode(raw: &str) -> Result<MatchMode, String> {
    serde_json::from_value(serde_json::Value::String(raw.to_string()))
        .map_err(|_| format!("unknown match mode {raw:?}; expected exact, normalized or containment"))
}

#[derive(Debug, Parser)]
#[command(name = "agentsynth", version, about = "Synthesize and filter tool-use trajectories for agent training")]
pub struct Cli {
    /// TOML config file, or a previous output file whose metadata to reuse.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub fixture_seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_steps: Option<usize>,
    #[arg(long, global = true, value_parser = parse_match_mode)]
    pub match_mode: Option<MatchMode>,
    /// Ignore unknown tool parameters instead of rejecting the call.
    #[arg(long, global = true)]
    pub lenient_args: bool,
    /// Ablation: no layered error feedback from the action handler.
    #[arg(long, global = true)]
    pub no_action_monitoring: bool,
    /// Ablation: accept trajectories without checking the final answer.
    #[arg(long, global = true)]
    pub no_trajectory_monitoring: bool,
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    #[arg(long, global = true)]
    pub target_accepted: Option<usize>,
    #[arg(long, global = true)]
    pub attempt_budget: Option<usize>,
    #[arg(long, global = true)]
    pub max_observation_bytes: Option<usize>,
    /// Drop erroneous steps from exported conversations.
    #[arg(long, global = true)]
    pub elide_error_steps: bool,
    #[arg(long, global = true)]
    pub templates: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tools: Option<PathBuf>,
    #[arg(long, global = true)]
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate unique query instances from templates.
    GenInstances {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write whatever unique instances exist instead of failing.
        #[arg(long)]
        allow_partial: bool,
    },
    /// Run an agent over instances until enough trajectories are accepted.
    Explore {
        #[arg(long)]
        instances: Option<PathBuf>,
        #[arg(long, value_enum)]
        agent: Option<AgentKind>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the filter report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// JSON array of raw actions for the scripted agent.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        fault_rate: Option<f64>,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        temperature: Option<f64>,
        /// Environment variable holding the API key.
        #[arg(long)]
        api_key_env: Option<String>,
    },
    /// Keep the trajectories that pass the filter.
    Filter {
        #[arg(long)]
        trajectories: Option<PathBuf>,
        #[arg(long)]
        instances: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write accepted trajectories as a chat-format JSONL dataset.
    Export {
        #[arg(long)]
        trajectories: Option<PathBuf>,
        #[arg(long)]
        instances: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error-layer statistics, one row per trajectory file.
    Stats {
        #[arg(long, num_args = 1..)]
        trajectories: Vec<PathBuf>,
        /// Sample this many actions (seeded) instead of using all of them.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// List the tools in the catalog.
    Catalog,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_some<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl Overrides {
    pub fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.fixture_seed, self.fixture_seed);
        set(&mut cfg.max_steps, self.max_steps);
        set(&mut cfg.match_mode, self.match_mode);
        set(&mut cfg.parallelism, self.parallelism);
        set(&mut cfg.target_accepted, self.target_accepted);
        set(&mut cfg.max_observation_bytes, self.max_observation_bytes);
        set_some(&mut cfg.attempt_budget, self.attempt_budget);
        set_some(&mut cfg.paths.templates, self.templates);
        set_some(&mut cfg.paths.tools, self.tools);
        set_some(&mut cfg.paths.fixtures, self.fixtures);
        if self.lenient_args {
            cfg.strict_args = false;
        }
        if self.no_action_monitoring {
            cfg.action_monitoring = false;
        }
        if self.no_trajectory_monitoring {
            cfg.trajectory_monitoring = false;
        }
        if self.elide_error_steps {
            cfg.elide_error_steps = true;
        }
    }
}

/// Resolves the effective config for a parsed command line.
pub fn resolve_config(cli: Cli) -> Result<(RunConfig, Command), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    let paths = &mut cfg.paths;
    match &cli.command {
        Command::GenInstances { count, out, .. } => {
            set(&mut cfg.count, *count);
            set_some(&mut cfg.paths.output, out.clone());
        }
        Command::Explore {
            instances,
            agent,
            out,
            report,
            script,
            fault_rate,
            endpoint,
            model,
            temperature,
            api_key_env,
        } => {
            set_some(&mut paths.instances, instances.clone());
            set_some(&mut paths.output, out.clone());
            set_some(&mut paths.report, report.clone());
            set(&mut cfg.agent, *agent);
            set_some(&mut cfg.script, script.clone());
            set(&mut cfg.fault_rate, *fault_rate);
            set(&mut cfg.remote.endpoint, endpoint.clone());
            set(&mut cfg.remote.model, model.clone());
            set(&mut cfg.remote.temperature, *temperature);
            set(&mut cfg.remote.api_key_env, api_key_env.clone());
        }
        Command::Filter { trajectories, instances, out } | Command::Export { trajectories, instances, out } => {
            if let Some(t) = trajectories {
                paths.trajectories = vec![t.clone()];
            }
            set_some(&mut paths.instances, instances.clone());
            set_some(&mut paths.output, out.clone());
        }
        Command::Stats { trajectories, samples, .. } => {
            if !trajectories.is_empty() {
                paths.trajectories = trajectories.clone();
            }
            set_some(&mut cfg.samples, *samples);
        }
        Command::Catalog => {}
    }
    Ok((cfg, cli.command))
}

pub fn dispatch(cfg: &RunConfig, command: &Command) -> Result<CommandOutput, CliError> {
    match command {
        Command::GenInstances { allow_partial, .. } => cmd_gen_instances(cfg, *allow_partial),
        Command::Explore { .. } => cmd_explore(cfg),
        Command::Filter { .. } => cmd_filter(cfg),
        Command::Export { .. } => cmd_export(cfg),
        Command::Stats { json, .. } => cmd_stats(cfg, *json),
        Command::Catalog => cmd_catalog(cfg),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = resolve_config(cli).and_then(|(cfg, command)| dispatch(&cfg, &command));
    match result {
        Ok(output) => {
            print!("{}", output.text);
            for warning in output.warnings {
                eprintln!("warning: {warning}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
