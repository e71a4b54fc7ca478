//! Seeded multi-trial sweeps and their reports.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::imputation::{resolve_budget, BudgetSpec, ImputationError};
use crate::pipeline::{run_flow, FlowConfig};
use crate::priority::{StrategyKind, StrategyRegistry};
use crate::simmetrics::{jaccard, rbo, MetricError};
use crate::tabular::{inject_mcar, load_dataset, Dataset, MaskedDataset, TabularError};
use crate::views::{rank_views, RankedViewList, ViewError};

mod config;
mod report;

pub use config::ExperimentConfig;
pub use report::{emit_report, AggregateRow, EvaluationReport, TrialRow, CI_Z};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    View(#[from] ViewError),
    #[error(transparent)]
    Imputation(#[from] ImputationError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Loads the configured dataset and runs the sweep.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvaluationReport, HarnessError> {
    config.validate()?;
    let dataset = load_dataset(&config.dataset_path, config.schema.clone())?;
    run_experiment_on(config, Arc::new(dataset))
}

/// Runs every (rate, seed) trial against an in-memory dataset. Trials run in
/// parallel; rows come back in (rate, seed, budget, strategy) order.
pub fn run_experiment_on(config: &ExperimentConfig, dataset: Arc<Dataset>) -> Result<EvaluationReport, HarnessError> {
    config.validate()?;
    let complete = MaskedDataset::complete(dataset.clone());
    let reference_top = rank_views(&complete, &config.target, &config.reference, config.distance)?.top_k(config.k);
    let registry = StrategyRegistry::builtin();

    let trials: Vec<(f64, u64)> = config
        .rates
        .iter()
        .flat_map(|&rate| (0..config.seeds).map(move |i| (rate, i)))
        .collect();
    log::info!(
        "{}: {} trials x {} strategies x {} budgets",
        config.dataset_name,
        trials.len(),
        config.strategies.len(),
        config.budgets.len()
    );

    let per_trial: Vec<Result<Vec<TrialRow>, HarnessError>> = trials
        .par_iter()
        .map(|&(rate, i)| {
            let seed = config.base_seed.wrapping_add(i);
            let masked = inject_mcar(dataset.clone(), rate, seed)?;
            run_trial(config, &registry, &masked, &reference_top, rate, seed)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_trial {
        rows.extend(r?);
    }
    Ok(EvaluationReport::from_trials(rows, config))
}

fn run_trial(
    config: &ExperimentConfig,
    registry: &StrategyRegistry,
    masked: &MaskedDataset,
    reference_top: &RankedViewList,
    rate: f64,
    seed: u64,
) -> Result<Vec<TrialRow>, HarnessError> {
    let mut flow = FlowConfig::new(config.k, config.target.clone(), config.reference.clone());
    flow.distance = config.distance;
    flow.regen = config.regen;
    flow.rank_score = config.rank_score;
    let mut rows = Vec::with_capacity(config.budgets.len() * config.strategies.len());
    for budget in &config.budgets {
        for &kind in &config.strategies {
            let strategy = registry.resolve(kind).map_err(ImputationError::from)?;
            let rec = run_flow(masked.clone(), budget, strategy.as_ref(), &flow, seed)?;
            rows.push(TrialRow {
                dataset: config.dataset_name.clone(),
                strategy: kind.token().to_string(),
                rate,
                budget: budget.to_string(),
                seed,
                k: config.k,
                regen: config.regen.token().to_string(),
                missing_cells: masked.missing_count(),
                budget_cells: budget_cells(budget, masked, kind)?,
                jaccard: jaccard(&rec.final_views, reference_top).value,
                rbo: rbo(&rec.final_views, reference_top, config.rbo_p)?.value,
                cells_imputed: rec.costs.cells_imputed,
                priority_evaluations: rec.costs.priority_evaluations,
                view_executions_temp: rec.costs.view_executions_temp,
                view_executions_final: rec.costs.view_executions_final,
            });
        }
    }
    Ok(rows)
}

fn budget_cells(budget: &BudgetSpec, masked: &MaskedDataset, kind: StrategyKind) -> Result<usize, HarnessError> {
    if kind == StrategyKind::NoImputation {
        return Ok(0);
    }
    Ok(resolve_budget(budget, masked)?)
}
