use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use rand::Rng;

use crate::tabular::{CellAddress, MaskedDataset};

use super::components::{ContributionScorer, FairnessScorer, RankingScorer, UsedViewScorer};
use super::{PriorityContext, PriorityError, PriorityMap, StrategyKind, WeightMode};

/// A priority function over the missing cells of one mask state.
pub trait PriorityStrategy: Debug + Send + Sync {
    fn kind(&self) -> StrategyKind;

    /// Component scores evaluated per cell; feeds the cost ledger.
    fn components(&self) -> u64;

    /// Weight profile of the temp-rank column scores, for the ranking family.
    fn weight_mode(&self) -> Option<WeightMode> {
        None
    }

    /// Scores `cells`, all of which must be missing in `masked`.
    fn score_cells(
        &self,
        masked: &MaskedDataset,
        cells: &[CellAddress],
        ctx: &mut PriorityContext,
    ) -> Result<Vec<f64>, PriorityError>;

    fn token(&self) -> &'static str {
        self.kind().token()
    }

    /// Scores every missing cell.
    fn score_all(
        &self,
        masked: &MaskedDataset,
        ctx: &mut PriorityContext,
    ) -> Result<PriorityMap, PriorityError> {
        let cells = masked.missing_cells();
        let scores = self.score_cells(masked, &cells, ctx)?;
        ctx.evaluations += self.components() * cells.len() as u64;
        Ok(PriorityMap {
            strategy: self.kind(),
            scores: cells.into_iter().zip(scores).collect(),
        })
    }
}

fn check_missing(masked: &MaskedDataset, cells: &[CellAddress]) -> Result<(), PriorityError> {
    match cells.iter().find(|c| !masked.is_missing(**c)) {
        Some(c) => Err(PriorityError::CellNotMissing(*c)),
        None => Ok(()),
    }
}

#[derive(Debug, Default)]
pub struct NoImputationStrategy;

impl PriorityStrategy for NoImputationStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::NoImputation
    }

    fn components(&self) -> u64 {
        0
    }

    fn score_cells(
        &self,
        masked: &MaskedDataset,
        cells: &[CellAddress],
        _ctx: &mut PriorityContext,
    ) -> Result<Vec<f64>, PriorityError> {
        check_missing(masked, cells)?;
        Ok(vec![0.0; cells.len()])
    }
}

/// Uniform draws from the context RNG.
#[derive(Debug, Default)]
pub struct RandomStrategy;

impl PriorityStrategy for RandomStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Random
    }

    fn components(&self) -> u64 {
        1
    }

    fn score_cells(
        &self,
        masked: &MaskedDataset,
        cells: &[CellAddress],
        ctx: &mut PriorityContext,
    ) -> Result<Vec<f64>, PriorityError> {
        check_missing(masked, cells)?;
        Ok(cells.iter().map(|_| ctx.rng.gen::<f64>()).collect())
    }
}

#[derive(Debug, Default)]
pub struct FairnessStrategy;

impl PriorityStrategy for FairnessStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Fairness
    }

    fn components(&self) -> u64 {
        1
    }

    fn score_cells(
        &self,
        masked: &MaskedDataset,
        cells: &[CellAddress],
        _ctx: &mut PriorityContext,
    ) -> Result<Vec<f64>, PriorityError> {
        check_missing(masked, cells)?;
        let fairness = FairnessScorer::new(masked);
        Ok(cells.iter().map(|&c| fairness.score(c)).collect())
    }
}

/// `N`, optionally multiplied by `F` and/or `V`.
#[derive(Debug)]
pub struct CellAwareStrategy {
    pub fairness: bool,
    pub used_view: bool,
}

impl PriorityStrategy for CellAwareStrategy {
    fn kind(&self) -> StrategyKind {
        match (self.fairness, self.used_view) {
            (false, false) => StrategyKind::Cell,
            (true, false) => StrategyKind::CellF,
            (false, true) => StrategyKind::CellV,
            (true, true) => StrategyKind::CellFV,
        }
    }

    fn components(&self) -> u64 {
        1 + u64::from(self.fairness) + u64::from(self.used_view)
    }

    fn score_cells(
        &self,
        masked: &MaskedDataset,
        cells: &[CellAddress],
        ctx: &mut PriorityContext,
    ) -> Result<Vec<f64>, PriorityError> {
        check_missing(masked, cells)?;
        let contribution = ContributionScorer::new(masked);
        let fairness = self.fairness.then(|| FairnessScorer::new(masked));
        let used = if self.used_view {
            Some(UsedViewScorer::new(masked, &ctx.target, &ctx.reference)?)
        } else {
            None
        };
        Ok(cells
            .iter()
            .map(|&c| {
                let mut p = contribution.score(c);
                if let Some(f) = &fairness {
                    p *= f.score(c);
                }
                if let Some(v) = &used {
                    p *= v.score(c);
                }
                p
            })
            .collect())
    }
}

/// `R` (constant weights) or `R̂` (inverted-U weights) from temp-rank
/// column scores carried in the context.
#[derive(Debug)]
pub struct RankingStrategy {
    pub weighted: bool,
}

impl PriorityStrategy for RankingStrategy {
    fn kind(&self) -> StrategyKind {
        if self.weighted {
            StrategyKind::RankingW
        } else {
            StrategyKind::Ranking
        }
    }

    fn components(&self) -> u64 {
        1
    }

    fn weight_mode(&self) -> Option<WeightMode> {
        Some(if self.weighted {
            WeightMode::InvertedU
        } else {
            WeightMode::Constant
        })
    }

    fn score_cells(
        &self,
        masked: &MaskedDataset,
        cells: &[CellAddress],
        ctx: &mut PriorityContext,
    ) -> Result<Vec<f64>, PriorityError> {
        check_missing(masked, cells)?;
        let columns = ctx
            .column_scores
            .as_ref()
            .ok_or(PriorityError::MissingContext(self.kind()))?;
        let ranking = RankingScorer::new(masked, columns);
        Ok(cells.iter().map(|&c| ranking.score(c)).collect())
    }
}

/// `R̂ × N × F`.
#[derive(Debug, Default)]
pub struct HybridStrategy;

impl PriorityStrategy for HybridStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Hybrid
    }

    fn components(&self) -> u64 {
        3
    }

    fn weight_mode(&self) -> Option<WeightMode> {
        Some(WeightMode::InvertedU)
    }

    fn score_cells(
        &self,
        masked: &MaskedDataset,
        cells: &[CellAddress],
        ctx: &mut PriorityContext,
    ) -> Result<Vec<f64>, PriorityError> {
        check_missing(masked, cells)?;
        let columns = ctx
            .column_scores
            .as_ref()
            .ok_or(PriorityError::MissingContext(self.kind()))?;
        let ranking = RankingScorer::new(masked, columns);
        let contribution = ContributionScorer::new(masked);
        let fairness = FairnessScorer::new(masked);
        Ok(cells
            .iter()
            .map(|&c| ranking.score(c) * contribution.score(c) * fairness.score(c))
            .collect())
    }
}

/// Strategies keyed by their config/CLI token.
#[derive(Debug, Clone, Default)]
pub struct StrategyRegistry {
    entries: BTreeMap<&'static str, Arc<dyn PriorityStrategy>>,
}

impl StrategyRegistry {
    pub fn new() -> Self {
        StrategyRegistry::default()
    }

    /// Registry holding every built-in strategy.
    pub fn builtin() -> Self {
        let mut registry = StrategyRegistry::new();
        registry.register(Arc::new(NoImputationStrategy));
        registry.register(Arc::new(RandomStrategy));
        registry.register(Arc::new(FairnessStrategy));
        for (fairness, used_view) in [(false, false), (true, false), (false, true), (true, true)] {
            registry.register(Arc::new(CellAwareStrategy { fairness, used_view }));
        }
        registry.register(Arc::new(RankingStrategy { weighted: false }));
        registry.register(Arc::new(RankingStrategy { weighted: true }));
        registry.register(Arc::new(HybridStrategy));
        registry
    }

    pub fn register(&mut self, strategy: Arc<dyn PriorityStrategy>) {
        self.entries.insert(strategy.token(), strategy);
    }

    pub fn get(&self, token: &str) -> Result<Arc<dyn PriorityStrategy>, PriorityError> {
        self.entries
            .get(token.trim().to_ascii_lowercase().as_str())
            .cloned()
            .ok_or_else(|| PriorityError::UnknownStrategy(token.to_string()))
    }

    pub fn resolve(&self, kind: StrategyKind) -> Result<Arc<dyn PriorityStrategy>, PriorityError> {
        self.get(kind.token())
    }

    pub fn tokens(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

/// Priority of one missing cell under a built-in strategy.
pub fn priority(
    cell: CellAddress,
    masked: &MaskedDataset,
    strategy: StrategyKind,
    ctx: &mut PriorityContext,
) -> Result<f64, PriorityError> {
    let strategy = StrategyRegistry::builtin().resolve(strategy)?;
    let scores = strategy.score_cells(masked, &[cell], ctx)?;
    ctx.evaluations += strategy.components();
    Ok(scores[0])
}
