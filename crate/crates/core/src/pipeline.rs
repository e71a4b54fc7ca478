//! End-to-end recommendation flows and their cost accounting.
//!
//! *Impute-first* runs a cell-aware selection and ranks the imputed data
//! once. *Insight-first* ranks the incomplete data (the temp-rank), selects a
//! batch from it, then re-executes only a regeneration set of views.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::imputation::{
    run_cell_aware, run_ranking_aware_with_rank, BudgetSpec, ImputationError, ImputationPlan,
};
use crate::priority::{Family, PriorityContext, PriorityStrategy, RankScore};
use crate::tabular::{MaskedDataset, SubsetSpec};
use crate::views::{enumerate_views, DistanceKind, RankedViewList, ScoredView, ViewEngine, ViewSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegenMode {
    NoOpt,
    TopK,
    KHighestImputed,
    #[default]
    TopKPlusKHighest,
}

impl RegenMode {
    pub const ALL: [RegenMode; 4] = [
        RegenMode::NoOpt,
        RegenMode::TopK,
        RegenMode::KHighestImputed,
        RegenMode::TopKPlusKHighest,
    ];

    pub fn token(self) -> &'static str {
        match self {
            RegenMode::NoOpt => "no-opt",
            RegenMode::TopK => "top-k",
            RegenMode::KHighestImputed => "k-highest",
            RegenMode::TopKPlusKHighest => "top-k-plus-k-highest",
        }
    }
}

impl fmt::Display for RegenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for RegenMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        RegenMode::ALL
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| format!("unknown regeneration mode `{s}`"))
    }
}

/// Operation counters of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostLedger {
    /// Proxy for the cleaning fee.
    pub cells_imputed: u64,
    /// Component priority evaluations.
    pub priority_evaluations: u64,
    /// View executions spent on the temp-rank.
    pub view_executions_temp: u64,
    /// View executions spent on the final recommendation.
    pub view_executions_final: u64,
    /// Measured seconds; excluded from reports so they stay reproducible.
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    /// `S_f`, at most `k` views.
    pub final_views: RankedViewList,
    pub temp_rank: Option<RankedViewList>,
    /// Every spec with its fresh or carried-over utility (insight-first only).
    pub merged: Option<RankedViewList>,
    pub regenerated: Vec<ViewSpec>,
    pub plan: ImputationPlan,
    pub costs: CostLedger,
}

/// Flow inputs shared by both pipelines.
#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub k: usize,
    pub target: SubsetSpec,
    pub reference: SubsetSpec,
    pub distance: DistanceKind,
    pub regen: RegenMode,
    pub rank_score: RankScore,
}

impl FlowConfig {
    pub fn new(k: usize, target: SubsetSpec, reference: SubsetSpec) -> Self {
        FlowConfig {
            k,
            target,
            reference,
            distance: DistanceKind::L2,
            regen: RegenMode::default(),
            rank_score: RankScore::Position,
        }
    }
}

/// Cell-aware selection, then one full ranking of the imputed data.
pub fn run_impute_first(
    masked: MaskedDataset,
    budget: &BudgetSpec,
    strategy: &dyn PriorityStrategy,
    flow: &FlowConfig,
    seed: u64,
) -> Result<Recommendation, ImputationError> {
    let started = Instant::now();
    let mut ctx = PriorityContext::new(flow.target.clone(), flow.reference.clone(), seed);
    let (imputed, plan) = run_cell_aware(masked, budget, strategy, &mut ctx)?;
    let engine = ViewEngine::new(&imputed, &flow.target, &flow.reference, flow.distance)?;
    let specs = enumerate_views(imputed.schema());
    let ranking = RankedViewList::from_scored(engine.score_all(&specs)?);
    let costs = CostLedger {
        cells_imputed: plan.steps.len() as u64,
        priority_evaluations: ctx.evaluations,
        view_executions_temp: 0,
        view_executions_final: 2 * specs.len() as u64,
        wall_time: Some(started.elapsed().as_secs_f64()),
    };
    Ok(Recommendation {
        final_views: ranking.top_k(flow.k),
        temp_rank: None,
        merged: None,
        regenerated: specs,
        plan,
        costs,
    })
}

/// Imputed-cell count per spec: plan cells in the spec's dimension or
/// measure column.
pub fn imputed_counts(plan: &ImputationPlan, masked: &MaskedDataset, specs: &[ViewSpec]) -> BTreeMap<ViewSpec, usize> {
    let schema = masked.schema();
    let mut per_column = vec![0usize; schema.column_count()];
    for cell in plan.cells() {
        per_column[cell.column] += 1;
    }
    specs
        .iter()
        .map(|s| {
            let d = schema.column_index(&s.dimension).map_or(0, |c| per_column[c]);
            let m = schema.column_index(&s.measure).map_or(0, |c| per_column[c]);
            (s.clone(), d + m)
        })
        .collect()
}

/// Specs to re-execute after imputation, sorted.
pub fn select_regeneration_set(
    temp_rank: &RankedViewList,
    plan: &ImputationPlan,
    k: usize,
    mode: RegenMode,
    masked_after: &MaskedDataset,
) -> Vec<ViewSpec> {
    let top_k = || temp_rank.top_k(k).specs().cloned().collect::<Vec<_>>();
    let k_highest = || {
        let all: Vec<ViewSpec> = temp_rank.specs().cloned().collect();
        let counts = imputed_counts(plan, masked_after, &all);
        let mut ordered: Vec<(ViewSpec, usize)> = counts.into_iter().collect();
        ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ordered.into_iter().take(k).map(|(s, _)| s).collect::<Vec<_>>()
    };
    let mut set = match mode {
        RegenMode::NoOpt => temp_rank.specs().cloned().collect(),
        RegenMode::TopK => top_k(),
        RegenMode::KHighestImputed => k_highest(),
        RegenMode::TopKPlusKHighest => {
            let mut s = top_k();
            s.extend(k_highest());
            s
        }
    };
    set.sort();
    set.dedup();
    set
}

/// Temp-rank on the incomplete data, batch selection, then re-execution of
/// the regeneration set on the imputed data.
///
/// The merged ranking keeps temp-rank utilities for specs outside the
/// regeneration set. `S_f` is the top-k of the merged ranking, except under
/// [`RegenMode::TopKPlusKHighest`] where it is the top-k of the regenerated
/// pool alone.
pub fn run_insight_first(
    masked: MaskedDataset,
    budget: &BudgetSpec,
    strategy: &dyn PriorityStrategy,
    flow: &FlowConfig,
    seed: u64,
) -> Result<Recommendation, ImputationError> {
    let started = Instant::now();
    let mut ctx = PriorityContext::new(flow.target.clone(), flow.reference.clone(), seed);
    let specs = enumerate_views(masked.schema());
    let temp_rank = {
        let engine = ViewEngine::new(&masked, &flow.target, &flow.reference, flow.distance)?;
        RankedViewList::from_scored(engine.score_all(&specs)?)
    };
    let (imputed, plan) = run_ranking_aware_with_rank(
        masked,
        budget,
        strategy,
        &temp_rank,
        flow.k,
        flow.rank_score,
        &mut ctx,
    )?;
    let regenerated = select_regeneration_set(&temp_rank, &plan, flow.k, flow.regen, &imputed);
    let engine = ViewEngine::new(&imputed, &flow.target, &flow.reference, flow.distance)?;
    let fresh: Vec<ScoredView> = engine.score_all(&regenerated)?;
    let mut merged_entries: Vec<ScoredView> = temp_rank
        .entries()
        .iter()
        .filter(|e| regenerated.binary_search(&e.spec).is_err())
        .cloned()
        .collect();
    merged_entries.extend(fresh.iter().cloned());
    let merged = RankedViewList::from_scored(merged_entries);
    let final_views = match flow.regen {
        RegenMode::TopKPlusKHighest => RankedViewList::from_scored(fresh).top_k(flow.k),
        _ => merged.top_k(flow.k),
    };
    let costs = CostLedger {
        cells_imputed: plan.steps.len() as u64,
        priority_evaluations: ctx.evaluations,
        view_executions_temp: 2 * specs.len() as u64,
        view_executions_final: 2 * regenerated.len() as u64,
        wall_time: Some(started.elapsed().as_secs_f64()),
    };
    Ok(Recommendation {
        final_views,
        temp_rank: Some(temp_rank),
        merged: Some(merged),
        regenerated,
        plan,
        costs,
    })
}

/// Dispatches on the strategy family.
pub fn run_flow(
    masked: MaskedDataset,
    budget: &BudgetSpec,
    strategy: &dyn PriorityStrategy,
    flow: &FlowConfig,
    seed: u64,
) -> Result<Recommendation, ImputationError> {
    match strategy.kind().family() {
        Family::CellAware => run_impute_first(masked, budget, strategy, flow, seed),
        Family::RankingAware => run_insight_first(masked, budget, strategy, flow, seed),
    }
}
