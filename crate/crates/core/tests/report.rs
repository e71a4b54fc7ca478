use std::sync::Arc;

use insight_impute::harness::{emit_report, run_experiment_on, ExperimentConfig};
use insight_impute::imputation::BudgetSpec;
use insight_impute::priority::StrategyKind;
use insight_impute::tabular::{load_dataset, Dataset, Schema, SubsetSpec};

const HEART: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/heart.csv");

fn setup() -> (ExperimentConfig, Arc<Dataset>) {
    let schema = Schema::with_default_aggregates(["sex", "cp", "exang", "disease"], ["age", "chol", "oldpeak"]).unwrap();
    let mut c = ExperimentConfig::with_defaults("heart", HEART, schema.clone());
    c.target = SubsetSpec::predicate("disease", "Yes");
    c.k = 5;
    c.seeds = 6;
    c.rates = vec![0.1, 0.3];
    c.budgets = vec![BudgetSpec::Fraction(0.1), BudgetSpec::Cells(30)];
    c.strategies = vec![StrategyKind::Random, StrategyKind::Cell, StrategyKind::Hybrid];
    (c, Arc::new(load_dataset(HEART, schema).unwrap()))
}

#[test]
fn aggregates_are_exact_means_of_trials() {
    let (c, ds) = setup();
    let report = run_experiment_on(&c, ds).unwrap();
    assert_eq!(report.trials.len(), 2 * 6 * 2 * 3);
    assert_eq!(report.aggregates.len(), 2 * 2 * 3);
    for a in &report.aggregates {
        let group: Vec<_> = report
            .trials
            .iter()
            .filter(|t| t.strategy == a.strategy && t.rate == a.rate && t.budget == a.budget)
            .collect();
        assert_eq!(group.len(), 6);
        let mean = group.iter().map(|t| t.rbo).sum::<f64>() / 6.0;
        assert!((mean - a.rbo_mean).abs() < 1e-12);
        assert!(a.rbo_ci_low <= a.rbo_mean && a.rbo_mean <= a.rbo_ci_high);
        let seeds: Vec<u64> = group.iter().map(|t| t.seed).collect();
        assert_eq!(seeds, (0..6).collect::<Vec<_>>());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (c, ds) = setup();
    let dir = tempfile::tempdir().unwrap();
    let a = run_experiment_on(&c, ds.clone()).unwrap();
    let b = run_experiment_on(&c, ds).unwrap();
    assert_eq!(a, b);
    let (ta, aa) = emit_report(&a, dir.path().join("a")).unwrap();
    let (tb, ab) = emit_report(&b, dir.path().join("b")).unwrap();
    assert_eq!(std::fs::read(ta).unwrap(), std::fs::read(tb).unwrap());
    assert_eq!(std::fs::read(aa).unwrap(), std::fs::read(ab).unwrap());
}

#[test]
fn base_seed_shifts_masks() {
    let (mut c, ds) = setup();
    c.seeds = 1;
    let a = run_experiment_on(&c, ds.clone()).unwrap();
    c.base_seed = 1000;
    let b = run_experiment_on(&c, ds).unwrap();
    assert_eq!(b.trials[0].seed, 1000);
    assert_ne!(a.trials, b.trials);
}
