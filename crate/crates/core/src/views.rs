//! Aggregate views, their execution over target/reference subsets, deviation
//! utility and ranking.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::tabular::{Aggregate, MaskedDataset, Membership, Schema, SubsetSpec, TabularError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ViewError {
    #[error("view references unknown column `{0}`")]
    UnknownColumn(String),
    #[error("no group survives the view")]
    EmptyDistribution,
    #[error("aggregate vector has a negative entry")]
    NegativeMass,
    #[error("ranking must be non-empty")]
    EmptyRanking,
    #[error("unknown distance `{0}` (expected l1 or l2)")]
    UnknownDistance(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
}

/// `<dimension, measure, aggregate>`. Ordering is lexicographic over the
/// three fields and is used for every deterministic tie-break.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ViewSpec {
    pub dimension: String,
    pub measure: String,
    pub aggregate: Aggregate,
}

impl ViewSpec {
    pub fn new(dimension: impl Into<String>, measure: impl Into<String>, aggregate: Aggregate) -> Self {
        ViewSpec {
            dimension: dimension.into(),
            measure: measure.into(),
            aggregate,
        }
    }

    /// True when the view reads the named column.
    pub fn mentions(&self, column: &str) -> bool {
        self.dimension == column || self.measure == column
    }
}

impl fmt::Display for ViewSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}({})>", self.dimension, self.aggregate, self.measure)
    }
}

/// Every `|A| x |M| x |F|` spec, sorted.
pub fn enumerate_views(schema: &Schema) -> Vec<ViewSpec> {
    let mut specs = Vec::with_capacity(
        schema.dimensions().len() * schema.measures().len() * schema.aggregates().len(),
    );
    for dimension in schema.dimensions() {
        for measure in schema.measures() {
            for &aggregate in schema.aggregates() {
                specs.push(ViewSpec::new(dimension.clone(), measure.clone(), aggregate));
            }
        }
    }
    specs.sort();
    specs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupMass {
    /// Index into the dimension's sorted dictionary.
    pub code: u32,
    pub mass: f64,
}

/// Normalized per-group aggregate values, ordered by group key.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupDistribution {
    groups: Vec<GroupMass>,
}

impl GroupDistribution {
    pub fn empty() -> Self {
        GroupDistribution::default()
    }

    /// Normalizes raw per-group aggregates. Entries must be sorted by code.
    ///
    /// A vector whose entries are all zero has no defined proportions; it is
    /// mapped to equal shares, which is the limit of any equal-valued vector.
    pub fn from_aggregates(values: Vec<(u32, f64)>) -> Result<Self, ViewError> {
        if values.is_empty() {
            return Err(ViewError::EmptyDistribution);
        }
        if values.iter().any(|&(_, v)| v < 0.0) {
            return Err(ViewError::NegativeMass);
        }
        let total: f64 = values.iter().map(|&(_, v)| v).sum();
        let n = values.len() as f64;
        let groups = values
            .into_iter()
            .map(|(code, v)| GroupMass {
                code,
                mass: if total > 0.0 { v / total } else { 1.0 / n },
            })
            .collect();
        Ok(GroupDistribution { groups })
    }

    pub fn groups(&self) -> &[GroupMass] {
        &self.groups
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.groups.iter().map(|g| g.mass).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceKind {
    L1,
    #[default]
    L2,
}

impl DistanceKind {
    pub fn token(self) -> &'static str {
        match self {
            DistanceKind::L1 => "l1",
            DistanceKind::L2 => "l2",
        }
    }

    fn accumulate(self, acc: f64, diff: f64) -> f64 {
        match self {
            DistanceKind::L1 => acc + diff.abs(),
            DistanceKind::L2 => acc + diff * diff,
        }
    }

    fn finish(self, acc: f64) -> f64 {
        match self {
            DistanceKind::L1 => acc,
            DistanceKind::L2 => acc.sqrt(),
        }
    }
}

impl FromStr for DistanceKind {
    type Err = ViewError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(DistanceKind::L1),
            "l2" => Ok(DistanceKind::L2),
            other => Err(ViewError::UnknownDistance(other.to_string())),
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Distance between two distributions after aligning on the union of group
/// keys (absent keys carry mass 0). Two empty distributions score 0.
pub fn deviation_utility(
    target: &GroupDistribution,
    reference: &GroupDistribution,
    distance: DistanceKind,
) -> f64 {
    let (a, b) = (target.groups(), reference.groups());
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.len() || j < b.len() {
        let diff = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.code == y.code => {
                i += 1;
                j += 1;
                x.mass - y.mass
            }
            (Some(x), Some(y)) if x.code < y.code => {
                i += 1;
                x.mass
            }
            (Some(_), Some(y)) => {
                j += 1;
                -y.mass
            }
            (Some(x), None) => {
                i += 1;
                x.mass
            }
            (None, Some(y)) => {
                j += 1;
                -y.mass
            }
            (None, None) => unreachable!(),
        };
        acc = distance.accumulate(acc, diff);
    }
    distance.finish(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredView {
    pub spec: ViewSpec,
    pub utility: f64,
}

/// Views sorted by descending utility, ties by ascending spec.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedViewList {
    entries: Vec<ScoredView>,
}

impl RankedViewList {
    pub fn from_scored(mut entries: Vec<ScoredView>) -> Self {
        entries.sort_by(|a, b| b.utility.total_cmp(&a.utility).then_with(|| a.spec.cmp(&b.spec)));
        RankedViewList { entries }
    }

    pub fn entries(&self) -> &[ScoredView] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn specs(&self) -> impl Iterator<Item = &ViewSpec> + '_ {
        self.entries.iter().map(|e| &e.spec)
    }

    /// 1-based rank of a spec.
    pub fn rank_of(&self, spec: &ViewSpec) -> Option<usize> {
        self.entries.iter().position(|e| &e.spec == spec).map(|p| p + 1)
    }

    pub fn utility_of(&self, spec: &ViewSpec) -> Option<f64> {
        self.entries.iter().find(|e| &e.spec == spec).map(|e| e.utility)
    }

    /// First `min(k, len)` entries; `k` is clamped to at least 1.
    pub fn top_k(&self, k: usize) -> RankedViewList {
        let k = k.max(1).min(self.entries.len());
        RankedViewList {
            entries: self.entries[..k].to_vec(),
        }
    }
}

/// Outcome of one view execution.
pub type Execution = Result<GroupDistribution, ViewError>;

/// Executes views against one masked dataset, holding the per-row subset
/// memberships so a batch of views shares them.
#[derive(Debug)]
pub struct ViewEngine<'a> {
    data: &'a MaskedDataset,
    target: Vec<Membership>,
    reference: Vec<Membership>,
    distance: DistanceKind,
}

impl<'a> ViewEngine<'a> {
    pub fn new(
        data: &'a MaskedDataset,
        target: &SubsetSpec,
        reference: &SubsetSpec,
        distance: DistanceKind,
    ) -> Result<Self, ViewError> {
        Ok(ViewEngine {
            data,
            target: target.memberships(data)?,
            reference: reference.memberships(data)?,
            distance,
        })
    }

    /// Target and reference distributions; the outer error is a malformed spec.
    pub fn distributions(&self, spec: &ViewSpec) -> Result<(Execution, Execution), ViewError> {
        Ok((
            execute_with_members(self.data, spec, &self.target)?,
            execute_with_members(self.data, spec, &self.reference)?,
        ))
    }

    /// Deviation utility of one spec. Views whose aggregates turn negative
    /// score 0.
    pub fn score(&self, spec: &ViewSpec) -> Result<ScoredView, ViewError> {
        let (target, reference) = self.distributions(spec)?;
        let utility = match (target, reference) {
            (Err(ViewError::NegativeMass), _) | (_, Err(ViewError::NegativeMass)) => {
                log::warn!("view {spec} has negative aggregates; scored 0");
                0.0
            }
            (t, r) => {
                let t = t.unwrap_or_default();
                let r = r.unwrap_or_default();
                deviation_utility(&t, &r, self.distance)
            }
        };
        Ok(ScoredView {
            spec: spec.clone(),
            utility,
        })
    }

    pub fn score_all<'s>(
        &self,
        specs: impl IntoIterator<Item = &'s ViewSpec>,
    ) -> Result<Vec<ScoredView>, ViewError> {
        specs.into_iter().map(|s| self.score(s)).collect()
    }
}

/// `SELECT A, F(M) FROM D WHERE T GROUP BY A`, normalized.
///
/// Rows with a missing predicate or dimension cell are skipped, and the
/// aggregate reads present measure cells only. Groups with no present
/// measure value are dropped.
pub fn execute_view(
    data: &MaskedDataset,
    spec: &ViewSpec,
    subset: &SubsetSpec,
) -> Result<GroupDistribution, ViewError> {
    let members = subset.memberships(data)?;
    execute_with_members(data, spec, &members)?
}

#[derive(Clone, Copy)]
struct Accumulator {
    count: usize,
    sum: f64,
    min: f64,
    max: f64,
}

impl Accumulator {
    const EMPTY: Accumulator = Accumulator {
        count: 0,
        sum: 0.0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };

    fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn finish(&self, aggregate: Aggregate) -> f64 {
        match aggregate {
            Aggregate::Avg => self.sum / self.count as f64,
            Aggregate::Count => self.count as f64,
            Aggregate::Max => self.max,
            Aggregate::Min => self.min,
            Aggregate::Sum => self.sum,
        }
    }
}

// Outer error: malformed spec. Inner: per-execution outcome.
fn execute_with_members(
    data: &MaskedDataset,
    spec: &ViewSpec,
    members: &[Membership],
) -> Result<Result<GroupDistribution, ViewError>, ViewError> {
    let schema = data.schema();
    let dim = schema
        .dimension_index(&spec.dimension)
        .ok_or_else(|| ViewError::UnknownColumn(spec.dimension.clone()))?;
    let measure = schema
        .measure_index(&spec.measure)
        .ok_or_else(|| ViewError::UnknownColumn(spec.measure.clone()))?;
    let groups = data.ground_truth().dimension(dim).dictionary().len();
    let mut acc = vec![Accumulator::EMPTY; groups];
    for (row, membership) in members.iter().enumerate() {
        if *membership != Membership::In {
            continue;
        }
        let (Some(code), Some(value)) = (data.dimension_code(row, dim), data.measure_value(row, measure))
        else {
            continue;
        };
        acc[code as usize].push(value);
    }
    let values: Vec<(u32, f64)> = acc
        .iter()
        .enumerate()
        .filter(|(_, a)| a.count > 0)
        .map(|(code, a)| (code as u32, a.finish(spec.aggregate)))
        .collect();
    Ok(GroupDistribution::from_aggregates(values))
}

/// Scores every enumerated view and sorts by descending utility.
pub fn rank_views(
    data: &MaskedDataset,
    target: &SubsetSpec,
    reference: &SubsetSpec,
    distance: DistanceKind,
) -> Result<RankedViewList, ViewError> {
    let engine = ViewEngine::new(data, target, reference, distance)?;
    let specs = enumerate_views(data.schema());
    Ok(RankedViewList::from_scored(engine.score_all(&specs)?))
}

pub fn top_k(ranking: &RankedViewList, k: usize) -> RankedViewList {
    ranking.top_k(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{CellAddress, Dataset};
    use std::sync::Arc;

    fn schema(d: usize, m: usize, aggs: usize) -> Schema {
        Schema::new(
            (0..d).map(|i| format!("d{i}")).collect(),
            (0..m).map(|i| format!("m{i}")).collect(),
            Aggregate::DEFAULT[..aggs].to_vec(),
        )
        .unwrap()
    }

    fn toy() -> Arc<Dataset> {
        let schema = Schema::with_default_aggregates(["g", "s"], ["v", "w"]).unwrap();
        let rows = [
            ["a", "y", "2", "1"],
            ["a", "n", "0", "3"],
            ["b", "y", "1", "2"],
            ["b", "y", "1", "5"],
            ["c", "n", "4", "1"],
            ["c", "y", "2", "2"],
            ["a", "y", "3", "4"],
            ["b", "n", "6", "1"],
            ["c", "y", "1", "1"],
            ["a", "n", "2", "2"],
        ];
        Arc::new(Dataset::from_records(schema, rows).unwrap())
    }

    #[test]
    fn view_counts_match_schema_products() {
        assert_eq!(enumerate_views(&schema(8, 6, 4)).len(), 192);
        assert_eq!(enumerate_views(&schema(4, 4, 4)).len(), 64);
        assert_eq!(enumerate_views(&schema(1, 1, 1)).len(), 1);
        let specs = enumerate_views(&schema(3, 2, 4));
        assert!(specs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn normalization_of_aggregates() {
        let d = GroupDistribution::from_aggregates(vec![(0, 2.0), (1, 2.0), (2, 4.0)]).unwrap();
        let masses: Vec<f64> = d.groups().iter().map(|g| g.mass).collect();
        assert_eq!(masses, vec![0.25, 0.25, 0.5]);
        assert_eq!(
            GroupDistribution::from_aggregates(vec![(0, -1.0), (1, 2.0)]),
            Err(ViewError::NegativeMass)
        );
        assert_eq!(GroupDistribution::from_aggregates(vec![]), Err(ViewError::EmptyDistribution));
        let zero = GroupDistribution::from_aggregates(vec![(0, 0.0), (3, 0.0)]).unwrap();
        assert_eq!(zero.groups()[1].mass, 0.5);
    }

    fn dist(pairs: &[(u32, f64)]) -> GroupDistribution {
        GroupDistribution::from_aggregates(pairs.to_vec()).unwrap()
    }

    #[test]
    fn utility_examples() {
        let p = dist(&[(0, 0.3), (1, 0.7)]);
        assert_eq!(deviation_utility(&p, &p, DistanceKind::L2), 0.0);
        let a = dist(&[(0, 1.0)]);
        let b = dist(&[(1, 1.0)]);
        assert!((deviation_utility(&a, &b, DistanceKind::L2) - 2f64.sqrt()).abs() < 1e-12);
        assert!((deviation_utility(&a, &b, DistanceKind::L1) - 2.0).abs() < 1e-12);
        // (0.3-0.5)^2 + (0.7-0.5)^2 = 0.08
        let q = dist(&[(0, 0.5), (1, 0.5)]);
        assert!((deviation_utility(&p, &q, DistanceKind::L2) - 0.08f64.sqrt()).abs() < 1e-12);
        assert!((deviation_utility(&p, &q, DistanceKind::L2) - 0.2828).abs() < 1e-4);
        assert_eq!(
            deviation_utility(&GroupDistribution::empty(), &GroupDistribution::empty(), DistanceKind::L2),
            0.0
        );
    }

    #[test]
    fn execute_skips_missing_dimension_and_measure_cells() {
        let ds = toy();
        let spec = ViewSpec::new("g", "v", Aggregate::Sum);
        let full = MaskedDataset::complete(ds.clone());
        let d = execute_view(&full, &spec, &SubsetSpec::WholeData).unwrap();
        // a: 2+0+3+2=7, b: 1+1+6=8, c: 4+2+1=7
        let masses: Vec<f64> = d.groups().iter().map(|g| g.mass).collect();
        assert_eq!(masses, vec![7.0 / 22.0, 8.0 / 22.0, 7.0 / 22.0]);

        let masked = MaskedDataset::with_mask(
            ds.clone(),
            [CellAddress::new(7, 0), CellAddress::new(0, 2), CellAddress::new(2, 1)],
        )
        .unwrap();
        let d = execute_view(&masked, &spec, &SubsetSpec::predicate("s", "y")).unwrap();
        // s=y rows with s present: 0,3,5,6,8; row 0 measure missing.
        // a: 3; b: 1; c: 2+1=3
        let masses: Vec<f64> = d.groups().iter().map(|g| g.mass).collect();
        assert_eq!(masses, vec![3.0 / 7.0, 1.0 / 7.0, 3.0 / 7.0]);
    }

    #[test]
    fn empty_groups_are_dropped() {
        let ds = toy();
        let mask = (0..10).filter(|r| r % 3 == 1).map(|r| CellAddress::new(r, 0));
        let masked = MaskedDataset::with_mask(ds.clone(), mask).unwrap();
        let spec = ViewSpec::new("g", "w", Aggregate::Max);
        let d = execute_view(&masked, &spec, &SubsetSpec::predicate("s", "n")).unwrap();
        // s=n rows 1,4,7,9; rows 1,4,7 have g masked -> only row 9 (a)
        assert_eq!(d.groups().len(), 1);
        assert_eq!(d.groups()[0].mass, 1.0);
        let all = (0..10).map(|r| CellAddress::new(r, 3));
        let masked = MaskedDataset::with_mask(ds, all).unwrap();
        assert_eq!(
            execute_view(&masked, &spec, &SubsetSpec::WholeData),
            Err(ViewError::EmptyDistribution)
        );
    }

    #[test]
    fn empty_mask_matches_ground_truth_execution() {
        let ds = toy();
        let a = MaskedDataset::complete(ds.clone());
        let r1 = rank_views(&a, &SubsetSpec::predicate("s", "y"), &SubsetSpec::WholeData, DistanceKind::L2).unwrap();
        let mut b = MaskedDataset::with_mask(ds, [CellAddress::new(1, 1)]).unwrap();
        b.impute_cell(CellAddress::new(1, 1)).unwrap();
        let r2 = rank_views(&b, &SubsetSpec::predicate("s", "y"), &SubsetSpec::WholeData, DistanceKind::L2).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.len(), 16);
        assert!(r1.entries().windows(2).all(|w| w[0].utility >= w[1].utility));
    }

    #[test]
    fn ranking_ties_are_lexicographic_and_top_k_truncates() {
        let list = RankedViewList::from_scored(vec![
            ScoredView { spec: ViewSpec::new("b", "m", Aggregate::Sum), utility: 0.5 },
            ScoredView { spec: ViewSpec::new("a", "m", Aggregate::Sum), utility: 0.5 },
            ScoredView { spec: ViewSpec::new("c", "m", Aggregate::Avg), utility: 0.9 },
        ]);
        let dims: Vec<&str> = list.specs().map(|s| s.dimension.as_str()).collect();
        assert_eq!(dims, vec!["c", "a", "b"]);
        assert_eq!(list.top_k(1).len(), 1);
        assert_eq!(list.top_k(1).entries()[0].spec.dimension, "c");
        assert_eq!(list.top_k(10).len(), 3);
        assert_eq!(list.rank_of(&ViewSpec::new("b", "m", Aggregate::Sum)), Some(3));
    }

    #[test]
    fn single_view_schema_ranks_one_entry() {
        let schema = Schema::new(vec!["g".into()], vec!["v".into()], vec![Aggregate::Avg]).unwrap();
        let ds = Arc::new(Dataset::from_records(schema, [["a", "1"], ["b", "2"]]).unwrap());
        let r = rank_views(&MaskedDataset::complete(ds), &SubsetSpec::WholeData, &SubsetSpec::WholeData, DistanceKind::L2).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.entries()[0].utility, 0.0);
    }

    #[test]
    fn distance_tokens() {
        assert_eq!("L1".parse::<DistanceKind>().unwrap(), DistanceKind::L1);
        assert_eq!("l2".parse::<DistanceKind>().unwrap(), DistanceKind::L2);
        assert!("emd".parse::<DistanceKind>().is_err());
    }
}
