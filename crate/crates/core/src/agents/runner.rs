use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use super::{AgentError, AgentFactory, AgentPolicy, ConversationView};
use crate::env::Environment;
use crate::query_gen::QueryInstance;
use crate::seed::derive_seed;
use crate::tools::FixtureStore;
use crate::trajectory::{filter_trajectory, FilterOptions, FilterReport, FilterVerdict, Trajectory};

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".to_string())
}

/// Drives one episode to termination. Policy errors and panics end the
/// episode as an aborted trajectory.
pub fn run_episode(
    episode_id: &str,
    instance: &QueryInstance,
    agent: &mut dyn AgentPolicy,
    env: &Environment<'_>,
    store: &FixtureStore,
    system_prompt: &str,
) -> Trajectory {
    let mut state = env.reset(instance, store);
    while state.is_running() {
        let view = ConversationView::from_state(&state, env.registry(), system_prompt);
        let raw = match catch_unwind(AssertUnwindSafe(|| agent.next_action(&view))) {
            Ok(Ok(raw)) => raw,
            Ok(Err(e)) => return Trajectory::from_state(episode_id, &state, Some(e.to_string())),
            Err(panic) => {
                let reason = format!("policy panicked: {}", panic_message(panic.as_ref()));
                return Trajectory::from_state(episode_id, &state, Some(reason));
            }
        };
        env.step(&mut state, &raw).expect("episode is running");
    }
    Trajectory::from_state(episode_id, &state, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationConfig {
    pub target_accepted: usize,
    pub parallelism: usize,
    pub seed: u64,
    /// Maximum attempts; `None` means 20 times the target.
    pub attempt_budget: Option<usize>,
    pub filter: FilterOptions,
}

impl ExplorationConfig {
    pub fn new(target_accepted: usize, seed: u64) -> Self {
        Self {
            target_accepted,
            parallelism: 1,
            seed,
            attempt_budget: None,
            filter: FilterOptions::default(),
        }
    }

    pub fn budget(&self) -> usize {
        self.attempt_budget
            .unwrap_or_else(|| self.target_accepted.saturating_mul(20))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationOutcome {
    /// Every attempt, in attempt order.
    pub trajectories: Vec<Trajectory>,
    pub verdicts: Vec<FilterVerdict>,
    pub report: FilterReport,
}

impl ExplorationOutcome {
    pub fn accepted(&self) -> Vec<&Trajectory> {
        self.trajectories
            .iter()
            .zip(&self.verdicts)
            .filter(|(_, v)| v.accepted)
            .map(|(t, _)| t)
            .collect()
    }

    pub fn attempts(&self) -> usize {
        self.trajectories.len()
    }
}

fn attempt(
    index: usize,
    instances: &[QueryInstance],
    factory: &dyn AgentFactory,
    env: &Environment<'_>,
    store: &FixtureStore,
    system_prompt: &str,
    config: &ExplorationConfig,
) -> (Trajectory, FilterVerdict) {
    let pick = derive_seed(config.seed, &["sample"], &[index as u64]) % instances.len() as u64;
    let instance = &instances[pick as usize];
    let episode_seed = derive_seed(config.seed, &["episode"], &[index as u64]);
    let episode_id = format!("ep-{index:06}");
    let created = catch_unwind(AssertUnwindSafe(|| factory.create(instance, episode_seed)));
    let trajectory = match created {
        Ok(Ok(mut agent)) => run_episode(&episode_id, instance, agent.as_mut(), env, store, system_prompt),
        Ok(Err(e)) => Trajectory::from_state(&episode_id, &env.reset(instance, store), Some(e.to_string())),
        Err(panic) => Trajectory::from_state(
            &episode_id,
            &env.reset(instance, store),
            Some(format!("agent construction panicked: {}", panic_message(panic.as_ref()))),
        ),
    };
    let verdict = filter_trajectory(&trajectory, instance, config.filter).expect("trajectory built for this instance");
    (trajectory, verdict)
}

#[derive(Default)]
struct Collected {
    results: BTreeMap<usize, (Trajectory, FilterVerdict)>,
    /// Length of the contiguous run of finished attempts starting at 0.
    prefix: usize,
    prefix_accepted: usize,
    /// Attempt count at which the target was reached.
    cutoff: Option<usize>,
}

impl Collected {
    fn advance(&mut self, target: usize) {
        while self.cutoff.is_none() {
            let Some((_, verdict)) = self.results.get(&self.prefix) else {
                break;
            };
            if verdict.accepted {
                self.prefix_accepted += 1;
            }
            self.prefix += 1;
            if self.prefix_accepted >= target {
                self.cutoff = Some(self.prefix);
            }
        }
    }
}

/// Samples instances (with replacement) and runs episodes until
/// `target_accepted` trajectories pass the filter.
///
/// Attempt `i` always uses the same instance and episode seed, and the
/// result is the shortest prefix of attempts holding the target, so the
/// outcome does not depend on `parallelism` for deterministic policies.
pub fn run_exploration(
    instances: &[QueryInstance],
    factory: &dyn AgentFactory,
    env: &Environment<'_>,
    store: &FixtureStore,
    system_prompt: &str,
    config: &ExplorationConfig,
) -> Result<ExplorationOutcome, AgentError> {
    if config.target_accepted == 0 {
        return Err(AgentError::InvalidTarget);
    }
    if instances.is_empty() {
        return Err(AgentError::NoInstances);
    }
    let budget = config.budget();
    let next = AtomicUsize::new(0);
    let done = AtomicBool::new(false);
    let collected = Mutex::new(Collected::default());

    thread::scope(|scope| {
        for _ in 0..config.parallelism.max(1) {
            scope.spawn(|| loop {
                if done.load(Ordering::SeqCst) {
                    break;
                }
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= budget {
                    break;
                }
                let result = attempt(index, instances, factory, env, store, system_prompt, config);
                let mut c = collected.lock().expect("collector lock");
                c.results.insert(index, result);
                c.advance(config.target_accepted);
                if c.cutoff.is_some() {
                    done.store(true, Ordering::SeqCst);
                }
            });
        }
    });

    let c = collected.into_inner().expect("collector lock");
    let keep = c.cutoff.unwrap_or(c.prefix);
    let mut outcome = ExplorationOutcome {
        trajectories: Vec::with_capacity(keep),
        verdicts: Vec::with_capacity(keep),
        report: FilterReport::default(),
    };
    for (_, (trajectory, verdict)) in c.results.into_iter().take_while(|(i, _)| *i < keep) {
        outcome.report.record(verdict);
        outcome.trajectories.push(trajectory);
        outcome.verdicts.push(verdict);
    }
    if c.cutoff.is_none() {
        return Err(AgentError::TargetUnreachable {
            target: config.target_accepted,
            accepted: outcome.report.accepted,
            attempts: outcome.attempts(),
            partial: Box::new(outcome),
        });
    }
    Ok(outcome)
}
