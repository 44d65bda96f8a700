use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Terminal, Trajectory, TrajectoryError};
use crate::query_gen::QueryInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    #[default]
    Normalized,
    Containment,
}

/// Trimmed, internal whitespace collapsed to single spaces, lowercased.
pub fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub fn match_answer(final_answer: &str, ground_truth: &str, mode: MatchMode) -> bool {
    if final_answer.trim().is_empty() || ground_truth.trim().is_empty() {
        return false;
    }
    match mode {
        MatchMode::Exact => final_answer == ground_truth,
        MatchMode::Normalized => normalize(final_answer) == normalize(ground_truth),
        MatchMode::Containment => normalize(final_answer).contains(&normalize(ground_truth)),
    }
}

/// Every error must be followed by an error-free next step. An error on the
/// last step is never recovered.
pub fn check_error_recovery(traj: &Trajectory) -> bool {
    let erroneous: BTreeSet<usize> = traj.error_history.iter().map(|e| e.step).collect();
    erroneous
        .iter()
        .all(|&t| t < traj.steps.len() && !erroneous.contains(&(t + 1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictReason {
    OkClean,
    OkRecovered,
    AnswerMismatch,
    UnrecoveredError,
    NoFinalAnswer,
    Aborted,
}

impl VerdictReason {
    pub const ALL: [VerdictReason; 6] = [
        VerdictReason::OkClean,
        VerdictReason::OkRecovered,
        VerdictReason::AnswerMismatch,
        VerdictReason::UnrecoveredError,
        VerdictReason::NoFinalAnswer,
        VerdictReason::Aborted,
    ];

    pub fn is_accept(self) -> bool {
        matches!(self, VerdictReason::OkClean | VerdictReason::OkRecovered)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictReason::OkClean => "ok_clean",
            VerdictReason::OkRecovered => "ok_recovered",
            VerdictReason::AnswerMismatch => "answer_mismatch",
            VerdictReason::UnrecoveredError => "unrecovered_error",
            VerdictReason::NoFinalAnswer => "no_final_answer",
            VerdictReason::Aborted => "aborted",
        }
    }
}

impl fmt::Display for VerdictReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accepted: bool,
    pub reason: VerdictReason,
}

impl From<VerdictReason> for FilterVerdict {
    fn from(reason: VerdictReason) -> Self {
        Self {
            accepted: reason.is_accept(),
            reason,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterOptions {
    pub mode: MatchMode,
    /// Off: answers are not compared with the ground truth.
    pub trajectory_monitoring: bool,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            mode: MatchMode::Normalized,
            trajectory_monitoring: true,
        }
    }
}

/// Checks run in order: aborted, unrecovered error, missing final answer,
/// answer mismatch. The first failing check names the verdict.
pub fn filter_trajectory(
    traj: &Trajectory,
    instance: &QueryInstance,
    options: FilterOptions,
) -> Result<FilterVerdict, TrajectoryError> {
    if traj.instance_id != instance.instance_id {
        return Err(TrajectoryError::InstanceMismatch {
            trajectory: traj.episode_id.clone(),
            expected: traj.instance_id.clone(),
            given: instance.instance_id.clone(),
        });
    }
    let reason = if matches!(traj.terminal, Terminal::Aborted { .. }) {
        VerdictReason::Aborted
    } else if !check_error_recovery(traj) {
        VerdictReason::UnrecoveredError
    } else {
        match traj.final_answer() {
            None => VerdictReason::NoFinalAnswer,
            Some(answer) if answer.trim().is_empty() => VerdictReason::NoFinalAnswer,
            Some(answer) => {
                if options.trajectory_monitoring && !match_answer(answer, &instance.ground_truth, options.mode) {
                    VerdictReason::AnswerMismatch
                } else if traj.error_history.is_empty() {
                    VerdictReason::OkClean
                } else {
                    VerdictReason::OkRecovered
                }
            }
        }
    };
    Ok(reason.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total: usize,
    pub accepted: usize,
    pub verdict_histogram: BTreeMap<VerdictReason, usize>,
    pub pass_rate: f64,
}

impl Default for FilterReport {
    fn default() -> Self {
        Self {
            total: 0,
            accepted: 0,
            verdict_histogram: VerdictReason::ALL.iter().map(|&r| (r, 0)).collect(),
            pass_rate: 0.0,
        }
    }
}

impl FilterReport {
    pub fn record(&mut self, verdict: FilterVerdict) {
        self.total += 1;
        if verdict.accepted {
            self.accepted += 1;
        }
        *self.verdict_histogram.entry(verdict.reason).or_insert(0) += 1;
        self.pass_rate = self.accepted as f64 / self.total as f64;
    }

    pub fn from_verdicts(verdicts: impl IntoIterator<Item = FilterVerdict>) -> Self {
        let mut report = Self::default();
        for v in verdicts {
            report.record(v);
        }
        report
    }

    pub fn count(&self, reason: VerdictReason) -> usize {
        self.verdict_histogram.get(&reason).copied().unwrap_or(0)
    }
}
