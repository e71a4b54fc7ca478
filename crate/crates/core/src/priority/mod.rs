//! Priority scores for missing cells.
//!
//! Every strategy implements [`PriorityStrategy`] and is looked up by token
//! through a [`StrategyRegistry`]. Component scores (contribution, fairness,
//! used-view, ranking) live in [`components`].

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tabular::{CellAddress, Schema, SubsetSpec, TabularError};

pub mod components;
mod strategies;

pub use components::{
    contribution_score, fairness_score, ranking_score, temp_rank_column_scores, used_view_score,
    ContributionScorer, FairnessScorer, RankingScorer, UsedViewScorer,
};
pub use strategies::{
    priority, CellAwareStrategy, FairnessStrategy, HybridStrategy, NoImputationStrategy,
    PriorityStrategy, RandomStrategy, RankingStrategy, StrategyRegistry,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorityError {
    #[error("cell {0} is not missing")]
    CellNotMissing(CellAddress),
    #[error("strategy `{0}` needs temp-rank column scores")]
    MissingContext(StrategyKind),
    #[error("ranking covers {found} views, expected {expected}")]
    IncompleteRanking { expected: usize, found: usize },
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyKind {
    NoImputation,
    Random,
    Fairness,
    Cell,
    CellF,
    CellV,
    CellFV,
    Ranking,
    RankingW,
    Hybrid,
}

/// How a strategy's cells are selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Scored without any view ranking; selected greedily with rescoring.
    CellAware,
    /// Scored once from a temporary ranking; selected as a batch.
    RankingAware,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 10] = [
        StrategyKind::NoImputation,
        StrategyKind::Random,
        StrategyKind::Fairness,
        StrategyKind::Cell,
        StrategyKind::CellF,
        StrategyKind::CellV,
        StrategyKind::CellFV,
        StrategyKind::Ranking,
        StrategyKind::RankingW,
        StrategyKind::Hybrid,
    ];

    pub fn token(self) -> &'static str {
        match self {
            StrategyKind::NoImputation => "none",
            StrategyKind::Random => "random",
            StrategyKind::Fairness => "fairness",
            StrategyKind::Cell => "cell",
            StrategyKind::CellF => "cell-f",
            StrategyKind::CellV => "cell-v",
            StrategyKind::CellFV => "cell-fv",
            StrategyKind::Ranking => "ranking",
            StrategyKind::RankingW => "ranking-w",
            StrategyKind::Hybrid => "hybrid",
        }
    }

    pub fn family(self) -> Family {
        match self {
            StrategyKind::Ranking | StrategyKind::RankingW | StrategyKind::Hybrid => Family::RankingAware,
            _ => Family::CellAware,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for StrategyKind {
    type Err = PriorityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or(PriorityError::UnknownStrategy(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    #[default]
    Constant,
    InvertedU,
}

/// Per-rank view weights: constant 1, or rising linearly over ranks `1..=k`
/// and falling linearly beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightProfile {
    pub mode: WeightMode,
    pub k: usize,
    pub view_count: usize,
    pub alpha_up: f64,
    pub beta_up: f64,
    pub alpha_down: f64,
    pub beta_down: f64,
}

impl WeightProfile {
    pub fn constant(view_count: usize) -> Self {
        WeightProfile {
            mode: WeightMode::Constant,
            k: 1,
            view_count,
            alpha_up: 0.0,
            beta_up: 1.0,
            alpha_down: 0.0,
            beta_down: 1.0,
        }
    }

    /// `w = k * rank` up to rank `k`, then `w = (|V| + k) - rank`.
    pub fn inverted_u(k: usize, view_count: usize) -> Self {
        WeightProfile {
            mode: WeightMode::InvertedU,
            k,
            view_count,
            alpha_up: k as f64,
            beta_up: 0.0,
            alpha_down: -1.0,
            beta_down: (view_count + k) as f64,
        }
    }

    pub fn for_mode(mode: WeightMode, k: usize, view_count: usize) -> Self {
        match mode {
            WeightMode::Constant => WeightProfile::constant(view_count),
            WeightMode::InvertedU => WeightProfile::inverted_u(k, view_count),
        }
    }

    /// Weight of a 1-based rank.
    pub fn weight(&self, rank: usize) -> f64 {
        match self.mode {
            WeightMode::Constant => 1.0,
            WeightMode::InvertedU if rank <= self.k => self.alpha_up * rank as f64 + self.beta_up,
            WeightMode::InvertedU => self.alpha_down * rank as f64 + self.beta_down,
        }
    }
}

/// Which per-view score feeds the column totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankScore {
    /// `|V| + 1 - rank`.
    #[default]
    Position,
    /// The view's deviation utility.
    Utility,
}

impl FromStr for RankScore {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "position" | "rank" => Ok(RankScore::Position),
            "utility" => Ok(RankScore::Utility),
            other => Err(format!("unknown rank score `{other}` (expected position or utility)")),
        }
    }
}

/// Max-normalized per-column scores, indexed by schema column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScores {
    totals: Vec<f64>,
    scores: Vec<f64>,
}

impl ColumnScores {
    pub fn from_totals(totals: Vec<f64>) -> Self {
        let max = totals.iter().copied().fold(0.0, f64::max);
        let scores = totals
            .iter()
            .map(|&t| if max > 0.0 { t / max } else { 0.0 })
            .collect();
        ColumnScores { totals, scores }
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    pub fn score(&self, column: usize) -> f64 {
        self.scores[column]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// `(column name, score)` pairs in schema order.
    pub fn named<'a>(&'a self, schema: &'a Schema) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.scores
            .iter()
            .enumerate()
            .map(move |(c, &s)| (schema.column_name(c), s))
    }
}

/// Scores for the cells of the current mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityMap {
    pub strategy: StrategyKind,
    /// Row-major.
    pub scores: Vec<(CellAddress, f64)>,
}

impl PriorityMap {
    pub fn get(&self, cell: CellAddress) -> Option<f64> {
        self.scores
            .binary_search_by(|(c, _)| c.cmp(&cell))
            .ok()
            .map(|i| self.scores[i].1)
    }

    pub fn max(&self) -> Option<f64> {
        self.scores.iter().map(|&(_, s)| s).reduce(f64::max)
    }
}

/// Inputs shared by scoring calls within one run.
#[derive(Debug, Clone)]
pub struct PriorityContext {
    pub target: SubsetSpec,
    pub reference: SubsetSpec,
    /// Column scores from the temp-rank; required by the ranking family.
    pub column_scores: Option<ColumnScores>,
    pub rng: ChaCha8Rng,
    /// Component evaluations performed so far.
    pub evaluations: u64,
}

impl PriorityContext {
    pub fn new(target: SubsetSpec, reference: SubsetSpec, seed: u64) -> Self {
        PriorityContext {
            target,
            reference,
            column_scores: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            evaluations: 0,
        }
    }

    pub fn with_column_scores(mut self, scores: ColumnScores) -> Self {
        self.column_scores = Some(scores);
        self
    }
}

#[cfg(test)]
mod tests;
