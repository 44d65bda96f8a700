use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use agentsynth::agents::{
    run_exploration, AgentError, AgentFactory, AgentPolicy, ExplorationConfig, ExplorationOutcome,
    FaultInjectingAgent, OracleFactory, RemoteChatAgent, ScriptedFactory,
};
use agentsynth::analysis::{error_taxonomy_stats, render_table, sample_actions, trajectory_stats, ErrorStats};
use agentsynth::env::{Environment, SYSTEM_PROMPT};
use agentsynth::query_gen::{
    bundled_templates, generate_instances, parse_templates, GenerationContext, IdentityParaphraser, PoolProvider,
    QueryGenError, QueryInstance, QueryTemplate,
};
use agentsynth::tools::{FixtureStore, ToolRegistry};
use agentsynth::trajectory::{
    export_chat_dataset, filter_trajectory, ExportOptions, FilterReport, Trajectory, TrajectoryError, VerdictReason,
};
use sha2::{Digest, Sha256};

use crate::config::{AgentKind, RunConfig};
use crate::io::{read_jsonl, write_jsonl, write_plain_jsonl, write_text, FileKind, Metadata, TrajectoryRecord};
use crate::CliError;

/// What a command prints: `text` to stdout, `warnings` to stderr.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommandOutput {
    pub text: String,
    pub warnings: Vec<String>,
}

impl CommandOutput {
    fn text(text: String) -> Self {
        Self { text, warnings: Vec::new() }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_registry(cfg: &RunConfig) -> Result<ToolRegistry, CliError> {
    match &cfg.paths.tools {
        Some(path) => Ok(ToolRegistry::from_catalog_json(&read_file(path)?)?),
        None => Ok(ToolRegistry::bundled()),
    }
}

pub fn load_templates(cfg: &RunConfig) -> Result<Vec<QueryTemplate>, CliError> {
    match &cfg.paths.templates {
        Some(path) => Ok(parse_templates(&read_file(path)?)?),
        None => Ok(bundled_templates()),
    }
}

pub fn load_store(cfg: &RunConfig) -> Result<FixtureStore, CliError> {
    match &cfg.paths.fixtures {
        Some(path) => FixtureStore::from_json(&read_file(path)?).map_err(|e| CliError::Malformed {
            path: path.clone(),
            line: e.line(),
            message: e.to_string(),
        }),
        None => Ok(FixtureStore::generate(cfg.fixture_seed)),
    }
}

pub fn fixture_digest(store: &FixtureStore) -> String {
    hex::encode(Sha256::digest(store.to_json().as_bytes()))
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    path.as_deref().ok_or_else(|| CliError::Usage(format!("{flag} is required")))
}

fn single_trajectory_file(cfg: &RunConfig) -> Result<&Path, CliError> {
    match cfg.paths.trajectories.as_slice() {
        [one] => Ok(one),
        [] => Err(CliError::Usage("--trajectories is required".to_string())),
        _ => Err(CliError::Usage("expected exactly one --trajectories file".to_string())),
    }
}

fn load_instances(cfg: &RunConfig) -> Result<(Metadata, Vec<QueryInstance>), CliError> {
    read_jsonl(require(&cfg.paths.instances, "--instances")?, FileKind::Instances)
}

fn instance_index(instances: Vec<QueryInstance>) -> BTreeMap<String, QueryInstance> {
    instances.into_iter().map(|i| (i.instance_id.clone(), i)).collect()
}

pub fn render_report(report: &FilterReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "attempts: {}", report.total);
    let _ = writeln!(out, "accepted: {}", report.accepted);
    let _ = writeln!(out, "pass_rate: {:.3}", report.pass_rate);
    for reason in VerdictReason::ALL {
        let _ = writeln!(out, "  {:<18}{}", reason.as_str(), report.count(reason));
    }
    out
}

pub fn cmd_gen_instances(cfg: &RunConfig, allow_partial: bool) -> Result<CommandOutput, CliError> {
    if cfg.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".to_string()));
    }
    let out = cfg.output()?;
    let templates = load_templates(cfg)?;
    let registry = load_registry(cfg)?;
    let store = load_store(cfg)?;
    let provider = PoolProvider::new();
    let ctx = GenerationContext {
        provider: &provider,
        paraphraser: &IdentityParaphraser,
        registry: &registry,
        store: &store,
    };
    let mut warnings = Vec::new();
    let instances = match generate_instances(&templates, cfg.count, &ctx, cfg.seed) {
        Ok(instances) => instances,
        Err(QueryGenError::UniquenessExhausted { requested, achieved, partial }) if allow_partial => {
            warnings.push(format!("only {achieved} of {requested} unique instances exist; writing a partial file"));
            *partial
        }
        Err(e) => return Err(e.into()),
    };
    let meta = Metadata::new(FileKind::Instances, cfg).with_fixture_digest(fixture_digest(&store));
    write_jsonl(out, &meta, &instances)?;

    let mut per_template: BTreeMap<&str, usize> = BTreeMap::new();
    for i in &instances {
        *per_template.entry(i.template_id.as_str()).or_insert(0) += 1;
    }
    let min = per_template.values().min().copied().unwrap_or(0);
    let max = per_template.values().max().copied().unwrap_or(0);
    let text = format!(
        "unique instances: {} of {} requested\ntemplates used: {} of {} ({min}-{max} instances each)\nwrote {}\n",
        instances.len(),
        cfg.count,
        per_template.len(),
        templates.len(),
        out.display()
    );
    Ok(CommandOutput { text, warnings })
}

fn agent_factory(cfg: &RunConfig, templates: Vec<QueryTemplate>) -> Result<Box<dyn AgentFactory>, CliError> {
    Ok(match cfg.agent {
        AgentKind::Oracle => Box::new(OracleFactory::new(templates)),
        AgentKind::Scripted => {
            let path = require(&cfg.script, "--script")?;
            let script: Vec<String> = serde_json::from_str(&read_file(path)?).map_err(|e| CliError::Malformed {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?;
            Box::new(ScriptedFactory::new(script))
        }
        AgentKind::Faulty => {
            if !(0.0..=1.0).contains(&cfg.fault_rate) {
                return Err(CliError::Usage("--fault-rate must be within [0, 1]".to_string()));
            }
            let oracles = OracleFactory::new(templates);
            let (rate, max_steps) = (cfg.fault_rate, cfg.max_steps);
            Box::new(move |instance: &QueryInstance, seed: u64| -> Result<Box<dyn AgentPolicy>, AgentError> {
                let inner = Box::new(oracles.oracle_for(instance)?);
                Ok(Box::new(FaultInjectingAgent::random(inner, seed, rate, max_steps)))
            })
        }
        AgentKind::Remote => {
            // Fail on missing credentials before any request is made.
            RemoteChatAgent::from_env(cfg.remote.clone())?;
            let remote = cfg.remote.clone();
            Box::new(move |_: &QueryInstance, _: u64| -> Result<Box<dyn AgentPolicy>, AgentError> {
                Ok(Box::new(RemoteChatAgent::from_env(remote.clone())?))
            })
        }
    })
}

pub fn cmd_explore(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let out = cfg.output()?;
    let (instance_meta, instances) = load_instances(cfg)?;
    let store = load_store(cfg)?;
    let digest = fixture_digest(&store);
    if let Some(expected) = &instance_meta.fixture_digest {
        if *expected != digest {
            return Err(CliError::Config(
                "the instance file was generated against different fixtures; pass the same --fixtures/--fixture-seed".to_string(),
            ));
        }
    }
    let registry = load_registry(cfg)?;
    let factory = agent_factory(cfg, load_templates(cfg)?)?;
    let env = Environment::new(&registry, cfg.env_config());
    let exploration = ExplorationConfig {
        target_accepted: cfg.target_accepted,
        parallelism: cfg.parallelism.max(1),
        seed: cfg.seed,
        attempt_budget: cfg.attempt_budget,
        filter: cfg.filter_options(),
    };
    let (outcome, failure) = match run_exploration(&instances, factory.as_ref(), &env, &store, SYSTEM_PROMPT, &exploration) {
        Ok(outcome) => (outcome, None),
        Err(AgentError::TargetUnreachable {
            target,
            accepted,
            attempts,
            partial,
        }) => {
            let message = format!("accepted {accepted} of {target} trajectories within {attempts} attempts");
            (*partial, Some(message))
        }
        Err(e) => return Err(e.into()),
    };
    write_outcome(cfg, out, &outcome, digest)?;
    if let Some(message) = failure {
        return Err(CliError::TargetUnreachable(message));
    }
    Ok(CommandOutput::text(format!("{}wrote {}\n", render_report(&outcome.report), out.display())))
}

fn write_outcome(cfg: &RunConfig, out: &Path, outcome: &ExplorationOutcome, digest: String) -> Result<(), CliError> {
    let records: Vec<TrajectoryRecord> = outcome
        .trajectories
        .iter()
        .zip(&outcome.verdicts)
        .map(|(t, v)| TrajectoryRecord {
            trajectory: t.clone(),
            verdict: *v,
        })
        .collect();
    write_jsonl(out, &Metadata::new(FileKind::Trajectories, cfg).with_fixture_digest(digest.clone()), &records)?;
    if let Some(report_path) = &cfg.paths.report {
        let meta = Metadata::new(FileKind::Report, cfg).with_fixture_digest(digest);
        write_jsonl(report_path, &meta, [&outcome.report])?;
    }
    Ok(())
}

fn load_trajectories(path: &Path) -> Result<Vec<Trajectory>, CliError> {
    let (_, records): (_, Vec<TrajectoryRecord>) = read_jsonl(path, FileKind::Trajectories)?;
    Ok(records.into_iter().map(|r| r.trajectory).collect())
}

pub fn cmd_filter(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let out = cfg.output()?;
    let trajectories = load_trajectories(single_trajectory_file(cfg)?)?;
    let instances = instance_index(load_instances(cfg)?.1);
    let mut report = FilterReport::default();
    let mut kept = Vec::new();
    for trajectory in trajectories {
        let instance = instances
            .get(&trajectory.instance_id)
            .ok_or_else(|| TrajectoryError::UnknownInstance(trajectory.instance_id.clone()))?;
        let verdict = filter_trajectory(&trajectory, instance, cfg.filter_options())?;
        report.record(verdict);
        if verdict.accepted {
            kept.push(TrajectoryRecord { trajectory, verdict });
        }
    }
    write_jsonl(out, &Metadata::new(FileKind::Trajectories, cfg), &kept)?;
    Ok(CommandOutput::text(format!("{}wrote {}\n", render_report(&report), out.display())))
}

/// Path of the metadata sidecar written next to a dataset file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

pub fn cmd_export(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let out = cfg.output()?;
    let trajectories = load_trajectories(single_trajectory_file(cfg)?)?;
    let instances = instance_index(load_instances(cfg)?.1);
    let options = ExportOptions {
        elide_error_steps: cfg.elide_error_steps,
    };
    let records = export_chat_dataset(&trajectories, &instances, SYSTEM_PROMPT, cfg.filter_options(), options)?;
    write_plain_jsonl(out, &records)?;
    let meta = serde_json::to_string(&Metadata::new(FileKind::Dataset, cfg)).expect("metadata serializes");
    write_text(&sidecar_path(out), &format!("{meta}\n"))?;
    let mut output = CommandOutput::text(format!("exported {} conversations\nwrote {}\n", records.len(), out.display()));
    if records.is_empty() {
        output.warnings.push("no accepted trajectories; the dataset file is empty".to_string());
    }
    Ok(output)
}

/// One row per trajectory file, labelled by file stem.
pub fn collect_stats(cfg: &RunConfig) -> Result<Vec<(String, ErrorStats)>, CliError> {
    if cfg.paths.trajectories.is_empty() {
        return Err(CliError::Usage("--trajectories is required".to_string()));
    }
    cfg.paths
        .trajectories
        .iter()
        .map(|path| {
            let trajectories = load_trajectories(path)?;
            let stats = match cfg.samples {
                Some(n) => error_taxonomy_stats(sample_actions(&trajectories, n, cfg.seed)?),
                None => trajectory_stats(&trajectories),
            };
            let label = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok((label, stats))
        })
        .collect()
}

pub fn cmd_stats(cfg: &RunConfig, json: bool) -> Result<CommandOutput, CliError> {
    let rows = collect_stats(cfg)?;
    if json {
        let value: Vec<_> = rows
            .iter()
            .map(|(label, stats)| serde_json::json!({ "label": label, "stats": stats }))
            .collect();
        return Ok(CommandOutput::text(format!("{}\n", serde_json::to_string_pretty(&value).expect("stats serialize"))));
    }
    let mut text = render_table(&rows);
    for (label, stats) in &rows {
        let _ = writeln!(
            text,
            "{label}: {} actions, {} errors, {:.4} errors per action, {} unclassified",
            stats.samples,
            stats.total_errors(),
            stats.mean_errors,
            stats.unclassified
        );
    }
    Ok(CommandOutput::text(text))
}

pub fn cmd_catalog(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let registry = load_registry(cfg)?;
    let mut text = String::new();
    for spec in registry.specs() {
        let params: Vec<String> = spec
            .params
            .iter()
            .map(|p| format!("{}{}: {}", p.name, if p.required { "" } else { "?" }, p.value_type.as_str()))
            .collect();
        let marker = if spec.is_terminal { " [terminal]" } else { "" };
        let _ = writeln!(text, "{}({}){marker}", spec.name, params.join(", "));
    }
    let _ = writeln!(text, "{} tools", registry.len());
    Ok(CommandOutput::text(text))
}
