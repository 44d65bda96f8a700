use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AgentError, AgentPolicy, ConversationView};
use crate::env::{format_tool_call, parse_action};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Make the action unparseable.
    CorruptStructure,
    /// Call a tool name that is not offered.
    SwapToolname,
    /// Remove the first required argument present in the call. Falls back
    /// to `CorruptStructure` when there is none.
    DropRequiredArg,
}

impl Fault {
    pub const ALL: [Fault; 3] = [Fault::CorruptStructure, Fault::SwapToolname, Fault::DropRequiredArg];

    fn apply(self, raw: &str, view: &ConversationView) -> String {
        let corrupt = || format!("I will now call the tool. {}", raw.replace('{', "(").replace('}', ")"));
        let Some(mut call) = parse_action(raw).parsed else {
            return corrupt();
        };
        match self {
            Fault::CorruptStructure => corrupt(),
            Fault::SwapToolname => {
                call.tool_name.push_str("_v2");
                format_tool_call(&call)
            }
            Fault::DropRequiredArg => {
                let victim = view.tool(&call.tool_name).and_then(|spec| {
                    spec.params
                        .iter()
                        .find(|p| p.required && call.arguments.contains_key(&p.name))
                        .map(|p| p.name.clone())
                });
                match victim {
                    Some(name) => {
                        call.arguments.remove(&name);
                        format_tool_call(&call)
                    }
                    None => corrupt(),
                }
            }
        }
    }
}

/// Wraps a policy and mangles its output at chosen steps (1-based). The
/// inner policy still sees the true history, so it can correct itself.
pub struct FaultInjectingAgent {
    inner: Box<dyn AgentPolicy>,
    faults: BTreeMap<usize, Fault>,
}

impl FaultInjectingAgent {
    pub fn new(inner: Box<dyn AgentPolicy>, faults: BTreeMap<usize, Fault>) -> Self {
        Self { inner, faults }
    }

    /// Each of steps `1..=max_steps` independently gets a fault with
    /// probability `rate`, never on two consecutive steps.
    pub fn random(inner: Box<dyn AgentPolicy>, seed: u64, rate: f64, max_steps: usize) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut faults = BTreeMap::new();
        for step in 1..=max_steps {
            let hit = rng.random_bool(rate.clamp(0.0, 1.0));
            let kind = Fault::ALL[rng.random_range(0..Fault::ALL.len())];
            if hit && !faults.contains_key(&(step - 1)) {
                faults.insert(step, kind);
            }
        }
        Self::new(inner, faults)
    }

    pub fn faults(&self) -> &BTreeMap<usize, Fault> {
        &self.faults
    }
}

impl AgentPolicy for FaultInjectingAgent {
    fn next_action(&mut self, view: &ConversationView) -> Result<String, AgentError> {
        let raw = self.inner.next_action(view)?;
        let step = view.turns.len() + 1;
        Ok(match self.faults.get(&step) {
            Some(fault) => fault.apply(&raw, view),
            None => raw,
        })
    }
}
