use std::sync::Arc;

use super::*;
use crate::tabular::{Aggregate, Dataset, MaskedDataset, Schema, SubsetSpec};
use crate::views::{RankedViewList, ScoredView, ViewSpec};
use crate::worked_examples::{cell, incomplete, temp_rank, temp_rank_scores};

fn ctx(seed: u64) -> PriorityContext {
    PriorityContext::new(SubsetSpec::WholeData, SubsetSpec::WholeData, seed)
}

/// cp, disease | age, chol
fn clinic() -> Arc<Dataset> {
    let schema = Schema::new(
        vec!["cp".into(), "disease".into()],
        vec!["age".into(), "chol".into()],
        vec![Aggregate::Avg],
    )
    .unwrap();
    let rows = [
        ["typical", "Yes", "50", "200"],
        ["atypical", "No", "60", "210"],
        ["asymptomatic", "Yes", "55", "250"],
        ["typical", "No", "45", "190"],
    ];
    Arc::new(Dataset::from_records(schema, rows).unwrap())
}

fn clinic_masked() -> MaskedDataset {
    // age missing everywhere, plus disease on row 3
    let mask = (0..4).map(|r| CellAddress::new(r, 2)).chain([CellAddress::new(3, 1)]);
    MaskedDataset::with_mask(clinic(), mask).unwrap()
}

#[test]
fn contribution_matches_present_counts() {
    let m = incomplete();
    let n = ContributionScorer::new(&m);
    // row 7 misses both dimensions, all three measures present
    assert_eq!(n.raw(cell(7, 1)), 3);
    assert_eq!(n.max_raw(), 3);
    assert!((n.score(cell(1, 1)) - 1.0 / 3.0).abs() < 1e-12);
    // row 9 is fully missing
    assert_eq!(n.raw(cell(9, 3)), 0);
    assert_eq!(n.score(cell(9, 3)), 0.0);
}

#[test]
fn fairness_is_relative_column_ratio() {
    let m = incomplete();
    let f = FairnessScorer::new(&m);
    assert_eq!(f.score(cell(2, 4)), 1.0);
    assert!((f.score(cell(2, 2)) - 5.0 / 7.0).abs() < 1e-12);
}

#[test]
fn used_view_cases() {
    let m = clinic_masked();
    let yes = SubsetSpec::predicate("disease", "Yes");
    // target disease=Yes against the whole table
    let v = UsedViewScorer::new(&m, &yes, &SubsetSpec::WholeData).unwrap();
    assert_eq!(v.score(CellAddress::new(0, 2)), 1.0);
    assert_eq!(v.score(CellAddress::new(1, 2)), 0.5);
    // unknown membership counts for the whole-table side only
    assert_eq!(v.raw(3), 1.0);
    // without a whole-table side it takes the largest known count
    let v = UsedViewScorer::new(&m, &yes, &SubsetSpec::predicate("disease", "No")).unwrap();
    assert_eq!(v.raw(3), 1.0);
    let v = UsedViewScorer::new(&m, &yes, &yes).unwrap();
    assert_eq!(v.raw(3), 2.0);
    // whole table on both sides: every row counts twice
    let v = UsedViewScorer::new(&m, &SubsetSpec::WholeData, &SubsetSpec::WholeData).unwrap();
    assert!((0..4).all(|r| v.score(CellAddress::new(r, 2)) == 1.0));
    // disjoint predicates: a row in neither side scores 0
    let v = UsedViewScorer::new(
        &m,
        &SubsetSpec::predicate("cp", "typical"),
        &SubsetSpec::predicate("cp", "atypical"),
    )
    .unwrap();
    assert_eq!(v.score(CellAddress::new(2, 2)), 0.0);
    assert_eq!(v.score(CellAddress::new(0, 2)), 1.0);
}

#[test]
fn used_view_rejects_measure_predicate() {
    let m = clinic_masked();
    assert!(UsedViewScorer::new(&m, &SubsetSpec::predicate("age", "50"), &SubsetSpec::WholeData).is_err());
}

#[test]
fn column_scores_from_fixture_ranking() {
    let s = temp_rank_scores();
    assert_eq!(s.totals(), &[7.0, 14.0, 4.0, 10.0, 7.0]);
    assert_eq!(s.score(1), 1.0);
    assert!((s.score(0) - 0.5).abs() < 1e-12);
    let schema = crate::worked_examples::schema();
    let names: Vec<&str> = s.named(&schema).map(|x| x.0).collect();
    assert_eq!(names, ["sex", "cp", "age", "oldpeak", "thalach"]);
}

#[test]
fn single_view_ranking_scores_its_two_columns() {
    let schema = Schema::new(vec!["d".into()], vec!["m".into()], vec![Aggregate::Sum]).unwrap();
    let ranking = RankedViewList::from_scored(vec![ScoredView {
        spec: ViewSpec::new("d", "m", Aggregate::Sum),
        utility: 0.3,
    }]);
    let s = temp_rank_column_scores(&ranking, &schema, &WeightProfile::constant(1), RankScore::Position).unwrap();
    assert_eq!(s.scores(), &[1.0, 1.0]);
}

#[test]
fn partial_ranking_is_rejected() {
    let partial = temp_rank().top_k(3);
    let err = temp_rank_column_scores(&partial, &crate::worked_examples::schema(), &WeightProfile::constant(3), RankScore::Position);
    assert_eq!(err, Err(PriorityError::IncompleteRanking { expected: 6, found: 3 }));
}

#[test]
fn utility_rank_score_uses_utilities() {
    let s = temp_rank_column_scores(&temp_rank(), &crate::worked_examples::schema(), &WeightProfile::constant(6), RankScore::Utility).unwrap();
    // cp: 0.6 + 0.5 + 0.3
    assert!((s.totals()[1] - 1.4).abs() < 1e-12);
    assert_eq!(s.score(1), 1.0);
}

#[test]
fn inverted_u_profile() {
    let p = WeightProfile::inverted_u(3, 6);
    let w: Vec<f64> = (1..=6).map(|r| p.weight(r)).collect();
    assert_eq!(w, [3.0, 6.0, 9.0, 5.0, 4.0, 3.0]);
    assert!((1..=6).all(|r| WeightProfile::constant(6).weight(r) == 1.0));
    assert_eq!(WeightProfile::for_mode(WeightMode::InvertedU, 3, 6), p);
}

#[test]
fn ranking_score_is_shared_across_a_row() {
    let m = incomplete();
    let s = temp_rank_scores();
    let row4: Vec<f64> = [2, 3, 4, 5].iter().map(|&c| ranking_score(cell(4, c), &m, &s).unwrap()).collect();
    assert!(row4.windows(2).all(|w| w[0] == w[1]));
    // (1 + 4/14 + 10/14 + 7/14) / 4
    assert!((row4[0] - (14.0 + 4.0 + 10.0 + 7.0) / 14.0 / 4.0).abs() < 1e-12);
}

#[test]
fn ranking_family_needs_column_scores() {
    let m = incomplete();
    for kind in [StrategyKind::Ranking, StrategyKind::RankingW, StrategyKind::Hybrid] {
        assert_eq!(priority(cell(1, 1), &m, kind, &mut ctx(0)), Err(PriorityError::MissingContext(kind)));
    }
    let mut c = ctx(0).with_column_scores(temp_rank_scores());
    assert_eq!(priority(cell(7, 1), &m, StrategyKind::Ranking, &mut c), Ok(0.75));
}

#[test]
fn random_is_seeded() {
    let m = incomplete();
    let s = StrategyRegistry::builtin().get("random").unwrap();
    let a = s.score_all(&m, &mut ctx(7)).unwrap();
    let b = s.score_all(&m, &mut ctx(7)).unwrap();
    let c = s.score_all(&m, &mut ctx(8)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.scores.iter().all(|&(_, v)| (0.0..1.0).contains(&v)));
}

#[test]
fn hybrid_is_product_of_components() {
    let m = incomplete();
    let scores = temp_rank_scores();
    let mut c = ctx(0).with_column_scores(scores.clone());
    let map = StrategyRegistry::builtin().get("hybrid").unwrap().score_all(&m, &mut c).unwrap();
    for &(cell, p) in &map.scores {
        let expected = ranking_score(cell, &m, &scores).unwrap()
            * contribution_score(cell, &m).unwrap()
            * fairness_score(cell, &m).unwrap();
        assert!((p - expected).abs() < 1e-12);
    }
    assert_eq!(c.evaluations, 3 * 27);
}

#[test]
fn cell_aware_products() {
    let m = incomplete();
    let reg = StrategyRegistry::builtin();
    let mut c = ctx(0);
    let cell_f = reg.get("cell-f").unwrap().score_all(&m, &mut c).unwrap();
    let cell_fv = reg.get("cell-fv").unwrap().score_all(&m, &mut c).unwrap();
    // whole-vs-whole makes V constant 1
    assert_eq!(cell_f.scores, cell_fv.scores);
    assert_eq!(c.evaluations, 2 * 27 + 3 * 27);
    for &(cell, p) in &cell_f.scores {
        let expected = contribution_score(cell, &m).unwrap() * fairness_score(cell, &m).unwrap();
        assert_eq!(p, expected);
    }
}

#[test]
fn registry_tokens_round_trip() {
    let reg = StrategyRegistry::builtin();
    let tokens: Vec<&str> = reg.tokens().collect();
    assert_eq!(tokens.len(), 10);
    for kind in StrategyKind::ALL {
        assert_eq!(reg.resolve(kind).unwrap().kind(), kind);
        assert_eq!(kind.token().parse::<StrategyKind>().unwrap(), kind);
    }
    assert_eq!(reg.get(" Cell-F ").unwrap().kind(), StrategyKind::CellF);
    assert!(matches!(reg.get("bogus"), Err(PriorityError::UnknownStrategy(_))));
    assert!("bogus".parse::<StrategyKind>().is_err());
}

#[test]
fn scores_lie_in_unit_interval_and_normalized_components_attain_one() {
    let m = incomplete();
    let reg = StrategyRegistry::builtin();
    for kind in StrategyKind::ALL {
        let mut c = ctx(1).with_column_scores(temp_rank_scores());
        let map = reg.resolve(kind).unwrap().score_all(&m, &mut c).unwrap();
        assert_eq!(map.scores.len(), 27);
        assert!(map.scores.iter().all(|&(_, v)| (0.0..=1.0).contains(&v)), "{kind}");
        if matches!(kind, StrategyKind::Cell | StrategyKind::Fairness | StrategyKind::CellV) {
            assert_eq!(map.max(), Some(1.0), "{kind}");
        }
    }
}

#[test]
fn present_cells_are_rejected() {
    let m = incomplete();
    let present = cell(1, 3);
    assert_eq!(contribution_score(present, &m), Err(PriorityError::CellNotMissing(present)));
    assert_eq!(fairness_score(present, &m), Err(PriorityError::CellNotMissing(present)));
    assert!(used_view_score(present, &m, &SubsetSpec::WholeData, &SubsetSpec::WholeData).is_err());
    assert!(ranking_score(present, &m, &temp_rank_scores()).is_err());
    assert!(StrategyRegistry::builtin().get("cell").unwrap().score_cells(&m, &[present], &mut ctx(0)).is_err());
}

#[test]
fn priority_map_lookup() {
    let m = incomplete();
    let map = StrategyRegistry::builtin().get("cell").unwrap().score_all(&m, &mut ctx(0)).unwrap();
    assert_eq!(map.get(cell(7, 1)), Some(1.0));
    assert_eq!(map.get(cell(1, 3)), None);
}
