//! Component scores of a missing cell. Each scorer snapshots its normalizer
//! from one mask state; rebuild it after imputing.

use crate::tabular::{CellAddress, MaskedDataset, Membership, SubsetSpec};
use crate::views::{RankedViewList, ViewSpec};

use super::{ColumnScores, PriorityError, RankScore, WeightProfile};

fn ensure_missing(masked: &MaskedDataset, cell: CellAddress) -> Result<(), PriorityError> {
    if masked.is_missing(cell) {
        Ok(())
    } else {
        Err(PriorityError::CellNotMissing(cell))
    }
}

fn normalized(raw: f64, max: f64) -> f64 {
    if max > 0.0 {
        raw / max
    } else {
        0.0
    }
}

/// Contribution `N`: how many views imputing the cell would feed.
///
/// A dimension cell pairs with the present measures of its row and a measure
/// cell with the present dimensions. The normalizer is the largest such count
/// over all currently missing cells.
#[derive(Debug)]
pub struct ContributionScorer<'a> {
    masked: &'a MaskedDataset,
    max_raw: usize,
}

impl<'a> ContributionScorer<'a> {
    pub fn new(masked: &'a MaskedDataset) -> Self {
        let mut max_raw = 0;
        for row in 0..masked.row_count() {
            if masked.row_missing_count(row) == 0 {
                continue;
            }
            for column in masked.missing_columns_in_row(row) {
                max_raw = max_raw.max(raw_contribution(masked, CellAddress::new(row, column)));
            }
        }
        ContributionScorer { masked, max_raw }
    }

    pub fn max_raw(&self) -> usize {
        self.max_raw
    }

    pub fn raw(&self, cell: CellAddress) -> usize {
        raw_contribution(self.masked, cell)
    }

    pub fn score(&self, cell: CellAddress) -> f64 {
        normalized(self.raw(cell) as f64, self.max_raw as f64)
    }
}

fn raw_contribution(masked: &MaskedDataset, cell: CellAddress) -> usize {
    if masked.schema().is_dimension(cell.column) {
        masked.row_present_measures(cell.row)
    } else {
        masked.row_present_dimensions(cell.row)
    }
}

/// Fairness `F`: the column's missing ratio over the largest column ratio.
#[derive(Debug)]
pub struct FairnessScorer<'a> {
    masked: &'a MaskedDataset,
    max_ratio: f64,
}

impl<'a> FairnessScorer<'a> {
    pub fn new(masked: &'a MaskedDataset) -> Self {
        let max_ratio = (0..masked.column_count())
            .map(|c| column_ratio(masked, c))
            .fold(0.0, f64::max);
        FairnessScorer { masked, max_ratio }
    }

    pub fn ratio(&self, column: usize) -> f64 {
        column_ratio(self.masked, column)
    }

    pub fn score(&self, cell: CellAddress) -> f64 {
        normalized(self.ratio(cell.column), self.max_ratio)
    }
}

fn column_ratio(masked: &MaskedDataset, column: usize) -> f64 {
    masked.column_missing_count(column) as f64 / masked.row_count() as f64
}

/// Used-view `V`: how many of the target/reference executions read the row.
///
/// A row whose membership is unknown (its predicate cell is missing) counts
/// only for a whole-table side. Without a whole-table side it takes the
/// largest count seen among rows with known membership.
#[derive(Debug)]
pub struct UsedViewScorer {
    per_row: Vec<f64>,
    max: f64,
}

impl UsedViewScorer {
    pub fn new(
        masked: &MaskedDataset,
        target: &SubsetSpec,
        reference: &SubsetSpec,
    ) -> Result<Self, PriorityError> {
        let t = target.memberships(masked)?;
        let r = reference.memberships(masked)?;
        let has_whole = *target == SubsetSpec::WholeData || *reference == SubsetSpec::WholeData;
        let counts: Vec<Option<usize>> = t
            .iter()
            .zip(&r)
            .map(|(a, b)| {
                let known = usize::from(*a == Membership::In) + usize::from(*b == Membership::In);
                match (a, b) {
                    (Membership::Unknown, _) | (_, Membership::Unknown) if !has_whole => None,
                    _ => Some(known),
                }
            })
            .collect();
        let known_max = counts.iter().flatten().copied().max().unwrap_or(2);
        let per_row: Vec<f64> = counts
            .into_iter()
            .map(|c| c.unwrap_or(known_max) as f64)
            .collect();
        let max = per_row.iter().copied().fold(0.0, f64::max);
        Ok(UsedViewScorer { per_row, max })
    }

    pub fn raw(&self, row: usize) -> f64 {
        self.per_row[row]
    }

    pub fn score(&self, cell: CellAddress) -> f64 {
        normalized(self.per_row[cell.row], self.max)
    }
}

/// Ranking `R`: mean column score over the missing columns of the cell's row.
#[derive(Debug)]
pub struct RankingScorer<'a> {
    masked: &'a MaskedDataset,
    columns: &'a ColumnScores,
}

impl<'a> RankingScorer<'a> {
    pub fn new(masked: &'a MaskedDataset, columns: &'a ColumnScores) -> Self {
        RankingScorer { masked, columns }
    }

    pub fn score(&self, cell: CellAddress) -> f64 {
        let (sum, n) = self
            .masked
            .missing_columns_in_row(cell.row)
            .fold((0.0, 0usize), |(s, n), c| (s + self.columns.score(c), n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

pub fn contribution_score(cell: CellAddress, masked: &MaskedDataset) -> Result<f64, PriorityError> {
    ensure_missing(masked, cell)?;
    Ok(ContributionScorer::new(masked).score(cell))
}

pub fn fairness_score(cell: CellAddress, masked: &MaskedDataset) -> Result<f64, PriorityError> {
    ensure_missing(masked, cell)?;
    Ok(FairnessScorer::new(masked).score(cell))
}

pub fn used_view_score(
    cell: CellAddress,
    masked: &MaskedDataset,
    target: &SubsetSpec,
    reference: &SubsetSpec,
) -> Result<f64, PriorityError> {
    ensure_missing(masked, cell)?;
    Ok(UsedViewScorer::new(masked, target, reference)?.score(cell))
}

pub fn ranking_score(
    cell: CellAddress,
    masked: &MaskedDataset,
    column_scores: &ColumnScores,
) -> Result<f64, PriorityError> {
    ensure_missing(masked, cell)?;
    Ok(RankingScorer::new(masked, column_scores).score(cell))
}

/// Column scores `ẑ_y` from a temporary ranking.
///
/// Each view gets `z = |V| + 1 - rank` (or its utility), multiplied by the
/// profile weight of its rank; each column sums the weighted scores of the
/// views that read it, and totals are divided by the largest total.
pub fn temp_rank_column_scores(
    ranking: &RankedViewList,
    schema: &crate::tabular::Schema,
    profile: &WeightProfile,
    rank_score: RankScore,
) -> Result<ColumnScores, PriorityError> {
    let expected = crate::views::enumerate_views(schema);
    let mut present: Vec<&ViewSpec> = ranking.specs().collect();
    present.sort();
    if present.len() != expected.len() || present.iter().zip(&expected).any(|(a, b)| *a != b) {
        return Err(PriorityError::IncompleteRanking {
            expected: expected.len(),
            found: ranking.len(),
        });
    }
    let view_count = ranking.len();
    let mut totals = vec![0.0; schema.column_count()];
    for (i, entry) in ranking.entries().iter().enumerate() {
        let rank = i + 1;
        let z = match rank_score {
            RankScore::Position => (view_count + 1 - rank) as f64,
            RankScore::Utility => entry.utility,
        };
        let weighted = z * profile.weight(rank);
        let dim = schema.column_index(&entry.spec.dimension).expect("validated spec");
        let measure = schema.column_index(&entry.spec.measure).expect("validated spec");
        totals[dim] += weighted;
        totals[measure] += weighted;
    }
    Ok(ColumnScores::from_totals(totals))
}
