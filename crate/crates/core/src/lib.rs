//! Budgeted imputation of missing cells for deviation-based top-k
//! visualization recommendation.
//!
//! Given an incomplete table and a budget of `g` cells, a priority strategy
//! picks which missing cells to restore so that the top-k views ranked on the
//! partially imputed data stay close to the top-k of the complete data.

pub mod harness;
pub mod imputation;
pub mod pipeline;
pub mod priority;
pub mod simmetrics;
pub mod tabular;
pub mod views;
pub mod worked_examples;

pub use harness::{emit_report, run_experiment, EvaluationReport, ExperimentConfig, HarnessError};
pub use imputation::{run_cell_aware, run_ranking_aware, BudgetSpec, ImputationError, ImputationPlan};
pub use pipeline::{run_flow, run_impute_first, run_insight_first, CostLedger, FlowConfig, Recommendation, RegenMode};
pub use priority::{priority, PriorityContext, PriorityStrategy, StrategyKind, StrategyRegistry};
pub use simmetrics::{jaccard, rbo, SimilarityScore};
pub use tabular::{inject_mcar, load_dataset, Aggregate, CellAddress, Dataset, MaskedDataset, Schema, SubsetSpec};
pub use views::{enumerate_views, rank_views, DistanceKind, RankedViewList, ViewSpec};
