use std::collections::BTreeSet;
use std::sync::OnceLock;

use agentsynth::agents::{run_episode, run_exploration, AgentError, AgentPolicy, ExplorationConfig, OracleFactory, ScriptedAgent};
use agentsynth::env::{format_tool_call, parse_action, EnvConfig, Environment, Monitoring, ToolCall, SYSTEM_PROMPT};
use agentsynth::query_gen::{
    bundled_templates, generate_instances, parse_template, sample_placeholders, serialize_template, GenerationContext,
    IdentityParaphraser, PoolProvider, QueryInstance, QueryTemplate,
};
use agentsynth::tools::{FixtureStore, ToolRegistry};
use agentsynth::trajectory::{
    check_error_recovery, filter_trajectory, match_answer, FilterOptions, Terminal, Trajectory,
};
use proptest::prelude::*;
use serde_json::{json, Value};

fn registry() -> &'static ToolRegistry {
    static REGISTRY: OnceLock<ToolRegistry> = OnceLock::new();
    REGISTRY.get_or_init(ToolRegistry::bundled)
}

fn templates() -> &'static [QueryTemplate] {
    static TEMPLATES: OnceLock<Vec<QueryTemplate>> = OnceLock::new();
    TEMPLATES.get_or_init(bundled_templates)
}

fn generate(count: usize, seed: u64, store: &FixtureStore) -> Vec<QueryInstance> {
    let provider = PoolProvider::new();
    let ctx = GenerationContext {
        provider: &provider,
        paraphraser: &IdentityParaphraser,
        registry: registry(),
        store,
    };
    generate_instances(templates(), count, &ctx, seed).unwrap()
}

fn oracle_raws(instance: &QueryInstance, store: &FixtureStore) -> Vec<String> {
    let env = Environment::new(registry(), EnvConfig::default());
    let mut agent = OracleFactory::new(templates().to_vec()).oracle_for(instance).unwrap();
    let traj = run_episode("oracle", instance, &mut agent, &env, store, SYSTEM_PROMPT);
    traj.steps.into_iter().map(|s| s.raw).collect()
}

/// Ways to mangle or replace one action.
#[derive(Debug, Clone, Copy)]
enum Move {
    Oracle,
    Prose,
    UnknownTool,
    NoArgs,
    ExtraArg,
    WrongAnswer,
    EmptyAnswer,
}

fn move_strategy() -> impl Strategy<Value = Move> {
    prop_oneof![
        4 => Just(Move::Oracle),
        1 => Just(Move::Prose),
        1 => Just(Move::UnknownTool),
        1 => Just(Move::NoArgs),
        1 => Just(Move::ExtraArg),
        1 => Just(Move::WrongAnswer),
        1 => Just(Move::EmptyAnswer),
    ]
}

/// Replays the oracle path, substituting moves as it goes. The oracle step
/// only advances on `Move::Oracle`.
struct Mixed {
    raws: Vec<String>,
    moves: Vec<Move>,
    cursor: usize,
}

impl AgentPolicy for Mixed {
    fn next_action(&mut self, view: &agentsynth::agents::ConversationView) -> Result<String, AgentError> {
        let step = view.turns.len();
        let raw = self.raws[self.cursor.min(self.raws.len() - 1)].clone();
        let mut call = parse_action(&raw).parsed.expect("oracle output parses");
        let out = match self.moves.get(step).copied().unwrap_or(Move::Oracle) {
            Move::Oracle => {
                self.cursor += 1;
                raw
            }
            Move::Prose => "I am not sure which tool to use.".to_string(),
            Move::UnknownTool => {
                call.tool_name = "lookup_everything".to_string();
                format_tool_call(&call)
            }
            Move::NoArgs => {
                call.arguments.clear();
                format_tool_call(&call)
            }
            Move::ExtraArg => {
                call.arguments.insert("verbose".into(), json!(true));
                format_tool_call(&call)
            }
            Move::WrongAnswer => finish("definitely not this"),
            Move::EmptyAnswer => finish(""),
        };
        Ok(out)
    }
}

fn finish(answer: &str) -> String {
    let mut args = serde_json::Map::new();
    args.insert("final_answer".into(), Value::String(answer.into()));
    format_tool_call(&ToolCall::new("Finish", args))
}

struct Corpus {
    store: FixtureStore,
    instances: Vec<QueryInstance>,
    raws: Vec<Vec<String>>,
}

fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let store = FixtureStore::generate(42);
        let instances = generate(60, 3, &store);
        let raws = instances.iter().map(|i| oracle_raws(i, &store)).collect();
        Corpus { store, instances, raws }
    })
}

fn mixed_trajectory(index: usize, moves: Vec<Move>, monitoring: Monitoring) -> (Trajectory, &'static QueryInstance) {
    let c = corpus();
    let instance = &c.instances[index % c.instances.len()];
    let config = EnvConfig {
        monitoring,
        ..EnvConfig::default()
    };
    let env = Environment::new(registry(), config);
    let mut agent = Mixed {
        raws: c.raws[index % c.instances.len()].clone(),
        moves,
        cursor: 0,
    };
    (run_episode("mixed", instance, &mut agent, &env, &c.store, SYSTEM_PROMPT), instance)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn template_round_trip(index in 0usize..30, distractors in 0usize..5, keep in 1usize..4, suffix in "[a-z]{0,6}") {
        let mut t = templates()[index].clone();
        t.template_id.push_str(&suffix);
        t.toolset_policy.distractor_count = distractors;
        for spec in t.placeholders.values_mut() {
            if let Some(pool) = spec.candidate_pool.as_mut() {
                pool.truncate(keep);
            }
        }
        let back = parse_template(&serialize_template(&t)).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn oracle_answers_match_ground_truth(index in 0usize..30, fixture_seed in any::<u64>(), value_seed in any::<u64>()) {
        let t = &templates()[index];
        let store = FixtureStore::generate(fixture_seed);
        let values = sample_placeholders(t, &PoolProvider::new(), value_seed).unwrap();
        let truth = agentsynth::query_gen::compute_ground_truth(t, &values, registry(), &store).unwrap();
        let instance = QueryInstance {
            instance_id: "p-000".into(),
            template_id: t.template_id.clone(),
            placeholder_values: values,
            query_text: String::new(),
            available_tools: agentsynth::query_gen::assemble_toolset(t, registry(), value_seed).unwrap(),
            ground_truth: truth,
            seed: value_seed,
        };
        let env = Environment::new(registry(), EnvConfig::default());
        let mut agent = OracleFactory::new(templates().to_vec()).oracle_for(&instance).unwrap();
        let traj = run_episode("p", &instance, &mut agent, &env, &store, SYSTEM_PROMPT);
        let verdict = filter_trajectory(&traj, &instance, FilterOptions::default()).unwrap();
        prop_assert!(verdict.accepted, "{}: {}", t.template_id, verdict.reason);
    }

    #[test]
    fn generation_is_unique_and_deterministic(seed in any::<u64>(), count in 1usize..120) {
        let store = FixtureStore::generate(7);
        let a = generate(count, seed, &store);
        prop_assert_eq!(&a, &generate(count, seed, &store));
        let keys: BTreeSet<String> = a
            .iter()
            .map(|i| format!("{}{}", i.template_id, serde_json::to_string(&i.placeholder_values).unwrap()))
            .collect();
        prop_assert_eq!(keys.len(), a.len());
        for inst in &a {
            let terminals = inst.available_tools.iter().filter(|t| registry().is_terminal(t)).count();
            prop_assert_eq!(terminals, 1);
        }
    }

    #[test]
    fn declared_alternatives_are_not_backfilled(seed in any::<u64>()) {
        let t = templates().iter().find(|t| !t.toolset_policy.alternatives.is_empty()).unwrap();
        let tools = agentsynth::query_gen::assemble_toolset(t, registry(), seed).unwrap();
        for (replaced, alt) in &t.toolset_policy.alternatives {
            prop_assert!(!tools.contains(replaced));
            prop_assert!(tools.contains(&alt.tool_name));
        }
    }

    #[test]
    fn execute_is_pure(tool_index in 0usize..57, seed in 0u64..4, arg in prop_oneof![Just(json!("Paris")), Just(json!("CASE-0003")), Just(json!(155)), Just(json!("AGT-02"))]) {
        let spec = registry().specs().nth(tool_index).unwrap();
        let mut args = serde_json::Map::new();
        for p in &spec.params {
            args.insert(p.name.clone(), arg.clone());
        }
        let store = FixtureStore::generate(seed);
        let (mut a, mut b) = (store.clone(), store.clone());
        prop_assert_eq!(spec.execute(&args, &mut a), spec.execute(&args, &mut b));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn episode_invariants(index in 0usize..60, moves in prop::collection::vec(move_strategy(), 0..12), monitored in any::<bool>()) {
        let monitoring = Monitoring { action_monitoring: monitored, trajectory_monitoring: true };
        let (traj, instance) = mixed_trajectory(index, moves, monitoring);
        prop_assert!(traj.is_consistent());
        for step in traj.steps.iter().filter(|s| s.is_error) {
            prop_assert!(!step.observation.is_empty());
            prop_assert_eq!(step.error_layer.is_some(), monitored);
            if let (true, Some(call)) = (monitored, parse_action(&step.raw).parsed) {
                prop_assert!(step.observation.contains(&call.tool_name), "{}", step.observation);
            }
        }
        for step in traj.steps.iter().filter(|s| !s.is_error) {
            prop_assert!(step.error_layer.is_none());
        }
        let on = filter_trajectory(&traj, instance, FilterOptions::default()).unwrap();
        if on.accepted {
            let finished = matches!(traj.terminal, Terminal::Finished { .. });
            prop_assert!(finished);
            prop_assert!(match_answer(traj.final_answer().unwrap(), &instance.ground_truth, Default::default()));
            prop_assert!(check_error_recovery(&traj));
        }
        let off = filter_trajectory(&traj, instance, FilterOptions { trajectory_monitoring: false, ..Default::default() }).unwrap();
        prop_assert!(!on.accepted || off.accepted);
    }

    #[test]
    fn finished_episodes_are_frozen(index in 0usize..60, extra in "[ -~]{0,40}") {
        let c = corpus();
        let instance = &c.instances[index];
        let env = Environment::new(registry(), EnvConfig::default());
        let mut state = env.reset(instance, &c.store);
        for raw in &c.raws[index] {
            env.step(&mut state, raw).unwrap();
        }
        prop_assert!(!state.is_running());
        let before = (Trajectory::from_state("x", &state, None), state.store.clone(), state.step_index);
        prop_assert!(env.step(&mut state, &extra).is_err());
        prop_assert_eq!(before, (Trajectory::from_state("x", &state, None), state.store.clone(), state.step_index));
    }

    #[test]
    fn exploration_ignores_parallelism(seed in any::<u64>(), target in 1usize..40, threads in 2usize..9) {
        let c = corpus();
        let env = Environment::new(registry(), EnvConfig::default());
        let factory = OracleFactory::new(templates().to_vec());
        let mut config = ExplorationConfig::new(target, seed);
        let serial = run_exploration(&c.instances, &factory, &env, &c.store, SYSTEM_PROMPT, &config).unwrap();
        config.parallelism = threads;
        let parallel = run_exploration(&c.instances, &factory, &env, &c.store, SYSTEM_PROMPT, &config).unwrap();
        prop_assert_eq!(serial, parallel);
    }
}

#[test]
fn failing_episodes_do_not_disturb_others() {
    let c = corpus();
    let env = Environment::new(registry(), EnvConfig::default());
    let oracles = OracleFactory::new(templates().to_vec());
    let mut config = ExplorationConfig::new(20, 9);
    config.parallelism = 4;
    config.attempt_budget = Some(200);
    // Every attempt the mixed run can make, played by the oracle alone.
    let all = ExplorationConfig { target_accepted: 200, ..config };
    let clean = run_exploration(&c.instances, &oracles, &env, &c.store, SYSTEM_PROMPT, &all).unwrap();
    let policy_only = |instance: &QueryInstance, seed: u64| -> Result<Box<dyn AgentPolicy>, AgentError> {
        if seed.is_multiple_of(2) {
            Ok(Box::new(Panicky))
        } else {
            Ok(Box::new(oracles.oracle_for(instance)?))
        }
    };
    let mixed = run_exploration(&c.instances, &policy_only, &env, &c.store, SYSTEM_PROMPT, &config).unwrap();
    let mut aborted = 0;
    for t in &mixed.trajectories {
        let twin = clean.trajectories.iter().find(|c| c.episode_id == t.episode_id);
        match &t.terminal {
            Terminal::Aborted { reason } => {
                assert!(reason.contains("panicked"), "{reason}");
                aborted += 1;
            }
            _ => assert_eq!(twin, Some(t)),
        }
    }
    assert!(aborted > 0);
}

struct Panicky;

impl AgentPolicy for Panicky {
    fn next_action(&mut self, _: &agentsynth::agents::ConversationView) -> Result<String, AgentError> {
        panic!("policy bug")
    }
}

#[test]
fn episodes_do_not_share_store_mutations() {
    let store = FixtureStore::generate(42);
    let instances = generate(400, 0, &store);
    let update = instances.iter().find(|i| i.template_id == "case_update").unwrap();
    let case_id = update.placeholder_values["case_id"].clone();
    let original = store.tables["cases"].iter().find(|r| r["case_id"] == case_id).unwrap()["status"].clone();
    let env = Environment::new(registry(), EnvConfig::default());
    let raws = oracle_raws(update, &store);
    let lookup = format_tool_call(&ToolCall::new(
        "get_case_by_id_for_crm",
        json!({ "case_id": case_id }).as_object().unwrap().clone(),
    ));
    std::thread::scope(|s| {
        let writers: Vec<_> = (0..4)
            .map(|_| {
                s.spawn(|| {
                    let mut agent = ScriptedAgent::new(raws.clone());
                    run_episode("w", update, &mut agent, &env, &store, SYSTEM_PROMPT)
                })
            })
            .collect();
        let mut reader = update.clone();
        reader.available_tools.insert(0, "get_case_by_id_for_crm".to_string());
        for _ in 0..4 {
            let mut state = env.reset(&reader, &store);
            let obs = env.step(&mut state, &lookup).unwrap();
            let record: Value = serde_json::from_str(&obs.text).unwrap();
            assert_eq!(record["status"], original);
        }
        for w in writers {
            assert!(matches!(w.join().unwrap().terminal, Terminal::Finished { .. }));
        }
    });
    assert_eq!(store, FixtureStore::generate(42));
}
