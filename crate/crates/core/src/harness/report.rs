use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ExperimentConfig, HarnessError};

/// Normal quantile for a two-sided 95% interval.
pub const CI_Z: f64 = 1.959964;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub dataset: String,
    pub strategy: String,
    pub rate: f64,
    pub budget: String,
    pub seed: u64,
    pub k: usize,
    pub regen: String,
    pub missing_cells: usize,
    pub budget_cells: usize,
    pub jaccard: f64,
    pub rbo: f64,
    pub cells_imputed: u64,
    pub priority_evaluations: u64,
    pub view_executions_temp: u64,
    pub view_executions_final: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub strategy: String,
    pub rate: f64,
    pub budget: String,
    pub trials: usize,
    pub jaccard_mean: f64,
    pub jaccard_ci_low: f64,
    pub jaccard_ci_high: f64,
    pub rbo_mean: f64,
    pub rbo_ci_low: f64,
    pub rbo_ci_high: f64,
    pub cells_imputed_mean: f64,
    pub priority_evaluations_mean: f64,
    pub view_executions_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationReport {
    pub trials: Vec<TrialRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// Mean and normal-approximation 95% interval with the sample standard
/// deviation; one observation gives a zero-width interval.
pub fn mean_ci(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let half = CI_Z * var.sqrt() / (n as f64).sqrt();
    (mean, mean - half, mean + half)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

impl EvaluationReport {
    /// Groups trials by (strategy, rate, budget) in config order.
    pub fn from_trials(trials: Vec<TrialRow>, config: &ExperimentConfig) -> Self {
        let mut aggregates = Vec::new();
        for &rate in &config.rates {
            for budget in &config.budgets {
                let budget = budget.to_string();
                for kind in &config.strategies {
                    let group: Vec<&TrialRow> = trials
                        .iter()
                        .filter(|t| t.rate == rate && t.budget == budget && t.strategy == kind.token())
                        .collect();
                    if group.is_empty() {
                        continue;
                    }
                    let j: Vec<f64> = group.iter().map(|t| t.jaccard).collect();
                    let r: Vec<f64> = group.iter().map(|t| t.rbo).collect();
                    let (jaccard_mean, jaccard_ci_low, jaccard_ci_high) = mean_ci(&j);
                    let (rbo_mean, rbo_ci_low, rbo_ci_high) = mean_ci(&r);
                    aggregates.push(AggregateRow {
                        dataset: config.dataset_name.clone(),
                        strategy: kind.token().to_string(),
                        rate,
                        budget: budget.clone(),
                        trials: group.len(),
                        jaccard_mean,
                        jaccard_ci_low,
                        jaccard_ci_high,
                        rbo_mean,
                        rbo_ci_low,
                        rbo_ci_high,
                        cells_imputed_mean: mean(group.iter().map(|t| t.cells_imputed as f64)),
                        priority_evaluations_mean: mean(group.iter().map(|t| t.priority_evaluations as f64)),
                        view_executions_mean: mean(
                            group.iter().map(|t| (t.view_executions_temp + t.view_executions_final) as f64),
                        ),
                    });
                }
            }
        }
        EvaluationReport { trials, aggregates }
    }

    pub fn aggregate(&self, strategy: &str) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.strategy == strategy)
    }
}

const TRIAL_HEADER: [&str; 15] = [
    "dataset",
    "strategy",
    "rate",
    "budget",
    "seed",
    "k",
    "regen",
    "missing_cells",
    "budget_cells",
    "jaccard",
    "rbo",
    "cells_imputed",
    "priority_evaluations",
    "view_executions_temp",
    "view_executions_final",
];

const AGGREGATE_HEADER: [&str; 14] = [
    "dataset",
    "strategy",
    "rate",
    "budget",
    "trials",
    "jaccard_mean",
    "jaccard_ci_low",
    "jaccard_ci_high",
    "rbo_mean",
    "rbo_ci_low",
    "rbo_ci_high",
    "cells_imputed_mean",
    "priority_evaluations_mean",
    "view_executions_mean",
];

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Writes `trials.csv` and `aggregates.csv` under `out_dir`, creating it if
/// needed. Returns both paths.
pub fn emit_report(report: &EvaluationReport, out_dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf), HarnessError> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io(format!("{}: {e}", out_dir.display())))?;
    let trials = out_dir.join("trials.csv");
    let aggregates = out_dir.join("aggregates.csv");
    write_csv(&trials, &TRIAL_HEADER, &report.trials)?;
    write_csv(&aggregates, &AGGREGATE_HEADER, &report.aggregates)?;
    Ok((trials, aggregates))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_arithmetic() {
        let (m, lo, hi) = mean_ci(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((hi - m - CI_Z * sd / 2.0).abs() < 1e-12);
        assert!((m - lo - (hi - m)).abs() < 1e-12);
        assert_eq!(mean_ci(&[0.7]), (0.7, 0.7, 0.7));
    }

    #[test]
    fn empty_report_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let (t, a) = emit_report(&EvaluationReport::default(), dir.path()).unwrap();
        assert_eq!(fs::read_to_string(t).unwrap(), format!("{}\n", TRIAL_HEADER.join(",")));
        assert_eq!(fs::read_to_string(a).unwrap(), format!("{}\n", AGGREGATE_HEADER.join(",")));
    }
}
