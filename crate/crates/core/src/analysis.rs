//! Error-taxonomy statistics and pass rates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::ErrorLayer;
use crate::seed::rng_from_seed;
use crate::trajectory::{FilterReport, Step, Trajectory};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("report has no trajectories")]
    EmptyReport,
    #[error("asked for {requested} samples but the corpus has {available} actions")]
    NotEnoughSamples { requested: usize, available: usize },
}

/// Error counts over a set of sampled actions. Each action counts at most
/// once, under the layer that rejected it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub samples: usize,
    pub per_layer: BTreeMap<ErrorLayer, usize>,
    /// Errors without a layer (action monitoring was off).
    pub unclassified: usize,
    /// Total errors divided by samples.
    pub mean_errors: f64,
    /// Mean of the structure, toolname and arguments counts. This is the
    /// aggregate that gives 16.67 for counts (25, 1, 24).
    pub per_layer_average: f64,
}

impl ErrorStats {
    pub fn layer(&self, layer: ErrorLayer) -> usize {
        self.per_layer.get(&layer).copied().unwrap_or(0)
    }

    pub fn total_errors(&self) -> usize {
        self.per_layer.values().sum::<usize>() + self.unclassified
    }
}

/// Statistics with one sample per action (step).
pub fn error_taxonomy_stats<'a>(steps: impl IntoIterator<Item = &'a Step>) -> ErrorStats {
    let mut per_layer: BTreeMap<ErrorLayer, usize> = ErrorLayer::ALL.iter().map(|&l| (l, 0)).collect();
    let mut samples = 0;
    let mut unclassified = 0;
    for step in steps {
        samples += 1;
        match (step.is_error, step.error_layer) {
            (_, Some(layer)) => *per_layer.entry(layer).or_insert(0) += 1,
            (true, None) => unclassified += 1,
            (false, None) => {}
        }
    }
    let total = per_layer.values().sum::<usize>() + unclassified;
    let validation = [ErrorLayer::Structure, ErrorLayer::Toolname, ErrorLayer::Arguments]
        .iter()
        .map(|l| per_layer[l])
        .sum::<usize>();
    ErrorStats {
        samples,
        per_layer,
        unclassified,
        mean_errors: if samples == 0 { 0.0 } else { total as f64 / samples as f64 },
        per_layer_average: validation as f64 / 3.0,
    }
}

/// Every action of every trajectory.
pub fn trajectory_stats(trajectories: &[Trajectory]) -> ErrorStats {
    error_taxonomy_stats(trajectories.iter().flat_map(|t| &t.steps))
}

/// `n` actions drawn without replacement from the whole corpus, seeded.
pub fn sample_actions(trajectories: &[Trajectory], n: usize, seed: u64) -> Result<Vec<&Step>, AnalysisError> {
    let all: Vec<&Step> = trajectories.iter().flat_map(|t| &t.steps).collect();
    if n > all.len() {
        return Err(AnalysisError::NotEnoughSamples {
            requested: n,
            available: all.len(),
        });
    }
    let mut rng = rng_from_seed(seed);
    let mut picked = sample(&mut rng, all.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| all[i]).collect())
}

pub fn pass_rate(report: &FilterReport) -> Result<f64, AnalysisError> {
    if report.total == 0 {
        return Err(AnalysisError::EmptyReport);
    }
    Ok(report.accepted as f64 / report.total as f64)
}

/// Aligned plain-text table, one row per labelled corpus.
pub fn render_table(rows: &[(String, ErrorStats)]) -> String {
    let header = ["Model", "ALL", "Structure", "Toolname", "Arguments", "Execution"];
    let body: Vec<[String; 6]> = rows
        .iter()
        .map(|(label, s)| {
            [
                label.clone(),
                format!("{:.2}", s.per_layer_average),
                s.layer(ErrorLayer::Structure).to_string(),
                s.layer(ErrorLayer::Toolname).to_string(),
                s.layer(ErrorLayer::Arguments).to_string(),
                s.layer(ErrorLayer::Execution).to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header.map(String::from));
    line(&widths.map(|w| "-".repeat(w)));
    for row in &body {
        line(row);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{FilterVerdict, Terminal, VerdictReason};
    use proptest::prelude::*;

    fn step(layer: Option<ErrorLayer>) -> Step {
        Step {
            raw: String::new(),
            observation: String::new(),
            is_error: layer.is_some(),
            error_layer: layer,
        }
    }

    fn corpus(structure: usize, toolname: usize, arguments: usize, total: usize) -> Vec<Step> {
        let mut steps = Vec::new();
        steps.extend((0..structure).map(|_| step(Some(ErrorLayer::Structure))));
        steps.extend((0..toolname).map(|_| step(Some(ErrorLayer::Toolname))));
        steps.extend((0..arguments).map(|_| step(Some(ErrorLayer::Arguments))));
        steps.resize(total, step(None));
        steps
    }

    #[test]
    fn constructed_corpus_counts() {
        let stats = error_taxonomy_stats(&corpus(25, 1, 24, 200));
        assert_eq!(stats.samples, 200);
        assert_eq!(
            [ErrorLayer::Structure, ErrorLayer::Toolname, ErrorLayer::Arguments, ErrorLayer::Execution].map(|l| stats.layer(l)),
            [25, 1, 24, 0]
        );
        assert!((stats.mean_errors - 0.25).abs() < 1e-12);
        assert_eq!(format!("{:.2}", stats.per_layer_average), "16.67");
    }

    #[test]
    fn clean_and_uniform_corpora() {
        let clean = error_taxonomy_stats(&corpus(0, 0, 0, 50));
        assert_eq!(clean.total_errors(), 0);
        assert_eq!(clean.mean_errors, 0.0);
        let args = error_taxonomy_stats(&corpus(0, 0, 10, 10));
        assert_eq!(args.mean_errors, 1.0);
    }

    #[test]
    fn unclassified_errors() {
        let steps = vec![Step { is_error: true, ..step(None) }, step(None)];
        let stats = error_taxonomy_stats(&steps);
        assert_eq!(stats.unclassified, 1);
        assert_eq!(stats.per_layer.values().sum::<usize>(), 0);
        assert_eq!(stats.mean_errors, 0.5);
    }

    #[test]
    fn pass_rates() {
        let report = |acc: usize, total: usize| {
            FilterReport::from_verdicts((0..total).map(|i| {
                FilterVerdict::from(if i < acc { VerdictReason::OkClean } else { VerdictReason::AnswerMismatch })
            }))
        };
        assert_eq!(pass_rate(&report(500, 500)), Ok(1.0));
        assert_eq!(pass_rate(&report(0, 10)), Ok(0.0));
        assert_eq!(pass_rate(&report(3, 8)), Ok(0.375));
        assert_eq!(pass_rate(&FilterReport::default()), Err(AnalysisError::EmptyReport));
    }

    #[test]
    fn table_layout() {
        let table = render_table(&[("constructed".to_string(), error_taxonomy_stats(&corpus(25, 1, 24, 200)))]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0].split_whitespace().collect::<Vec<_>>(), ["Model", "ALL", "Structure", "Toolname", "Arguments", "Execution"]);
        assert_eq!(lines[2].split_whitespace().collect::<Vec<_>>(), ["constructed", "16.67", "25", "1", "24", "0"]);
    }

    #[test]
    fn sampling_is_seeded_and_bounded() {
        let t = Trajectory {
            episode_id: "e".into(),
            instance_id: "i".into(),
            steps: corpus(3, 0, 0, 10),
            terminal: Terminal::StepLimitExceeded,
            error_history: vec![],
        };
        let a = sample_actions(std::slice::from_ref(&t), 5, 1).unwrap();
        let b = sample_actions(std::slice::from_ref(&t), 5, 1).unwrap();
        assert_eq!(a, b);
        assert!(matches!(sample_actions(&[t], 11, 1), Err(AnalysisError::NotEnoughSamples { .. })));
    }

    fn layer_strategy() -> impl Strategy<Value = Option<ErrorLayer>> {
        prop_oneof![Just(None), proptest::sample::select(ErrorLayer::ALL.to_vec()).prop_map(Some)]
    }

    proptest! {
        #[test]
        fn order_independent_and_partitioned(layers in prop::collection::vec(layer_strategy(), 0..60), seed in any::<u64>()) {
            let steps: Vec<Step> = layers.into_iter().map(step).collect();
            let mut shuffled = steps.clone();
            rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng_from_seed(seed));
            let a = error_taxonomy_stats(&steps);
            prop_assert_eq!(&a, &error_taxonomy_stats(&shuffled));
            let errors = steps.iter().filter(|s| s.is_error).count();
            prop_assert_eq!(a.per_layer.values().sum::<usize>(), errors);
        }
    }
}
