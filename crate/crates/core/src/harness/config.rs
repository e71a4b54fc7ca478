use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::imputation::BudgetSpec;
use crate::pipeline::RegenMode;
use crate::priority::{RankScore, StrategyKind};
use crate::simmetrics::DEFAULT_RBO_P;
use crate::tabular::{Aggregate, Schema, SubsetSpec};
use crate::views::DistanceKind;

use super::HarnessError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: RawDataset,
    #[serde(default)]
    subsets: RawSubsets,
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    strategies: RawStrategies,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    name: Option<String>,
    path: PathBuf,
    dimensions: Vec<String>,
    measures: Vec<String>,
    aggregates: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubsets {
    target: String,
    reference: String,
}

impl Default for RawSubsets {
    fn default() -> Self {
        RawSubsets {
            target: "whole".into(),
            reference: "whole".into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudget {
    kind: String,
    value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawExperiment {
    k: usize,
    rates: Vec<f64>,
    seeds: u64,
    base_seed: u64,
    distance: String,
    rbo_p: f64,
    regen: String,
    rank_score: String,
    budgets: Vec<RawBudget>,
}

impl Default for RawExperiment {
    fn default() -> Self {
        RawExperiment {
            k: 10,
            rates: vec![0.2],
            seeds: 100,
            base_seed: 0,
            distance: "l2".into(),
            rbo_p: DEFAULT_RBO_P,
            regen: RegenMode::default().token().into(),
            rank_score: "position".into(),
            budgets: vec![RawBudget {
                kind: "fraction".into(),
                value: 0.1,
            }],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStrategies {
    names: Vec<String>,
}

impl Default for RawStrategies {
    fn default() -> Self {
        RawStrategies {
            names: StrategyKind::ALL.iter().map(|k| k.token().to_string()).collect(),
        }
    }
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset_name: String,
    pub dataset_path: PathBuf,
    pub schema: Schema,
    pub target: SubsetSpec,
    pub reference: SubsetSpec,
    pub k: usize,
    pub rates: Vec<f64>,
    pub seeds: u64,
    pub base_seed: u64,
    pub distance: DistanceKind,
    pub rbo_p: f64,
    pub regen: RegenMode,
    pub rank_score: RankScore,
    pub budgets: Vec<BudgetSpec>,
    pub strategies: Vec<StrategyKind>,
}

impl ExperimentConfig {
    /// Defaults for a dataset: whole-vs-whole, k = 10, 20% missing, a 10%
    /// budget, 100 seeds, every strategy.
    pub fn with_defaults(name: impl Into<String>, path: impl Into<PathBuf>, schema: Schema) -> Self {
        ExperimentConfig {
            dataset_name: name.into(),
            dataset_path: path.into(),
            schema,
            target: SubsetSpec::WholeData,
            reference: SubsetSpec::WholeData,
            k: 10,
            rates: vec![0.2],
            seeds: 100,
            base_seed: 0,
            distance: DistanceKind::L2,
            rbo_p: DEFAULT_RBO_P,
            regen: RegenMode::default(),
            rank_score: RankScore::Position,
            budgets: vec![BudgetSpec::Fraction(0.1)],
            strategies: StrategyKind::ALL.to_vec(),
        }
    }

    /// Reads a TOML file; a relative dataset path resolves against the
    /// file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let bad = |what: &str, e: String| HarnessError::Config(format!("{what}: {e}"));

        let aggregates = match raw.dataset.aggregates {
            Some(tokens) => tokens
                .iter()
                .map(|t| t.parse::<Aggregate>().map_err(|e| bad("dataset.aggregates", e.to_string())))
                .collect::<Result<Vec<_>, _>>()?,
            None => Aggregate::DEFAULT.to_vec(),
        };
        let schema = Schema::new(raw.dataset.dimensions, raw.dataset.measures, aggregates)
            .map_err(|e| bad("dataset", e.to_string()))?;
        let dataset_path = if raw.dataset.path.is_absolute() {
            raw.dataset.path
        } else {
            base_dir.join(raw.dataset.path)
        };
        let dataset_name = raw.dataset.name.unwrap_or_else(|| {
            dataset_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        });

        let target: SubsetSpec = raw.subsets.target.parse().map_err(|e: crate::tabular::TabularError| bad("subsets.target", e.to_string()))?;
        let reference: SubsetSpec = raw
            .subsets
            .reference
            .parse()
            .map_err(|e: crate::tabular::TabularError| bad("subsets.reference", e.to_string()))?;
        target.validate(&schema).map_err(|e| bad("subsets.target", e.to_string()))?;
        reference.validate(&schema).map_err(|e| bad("subsets.reference", e.to_string()))?;

        let ex = raw.experiment;
        let budgets = ex
            .budgets
            .iter()
            .map(|b| match b.kind.as_str() {
                "cells" if b.value >= 0.0 && b.value.fract() == 0.0 => Ok(BudgetSpec::Cells(b.value as usize)),
                "fraction" if (0.0..=1.0).contains(&b.value) => Ok(BudgetSpec::Fraction(b.value)),
                other => Err(bad(
                    "experiment.budgets",
                    format!("invalid budget kind `{other}` with value {}", b.value),
                )),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let strategies = raw
            .strategies
            .names
            .iter()
            .map(|n| n.parse::<StrategyKind>().map_err(|e| bad("strategies.names", e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;

        let config = ExperimentConfig {
            dataset_name,
            dataset_path,
            schema,
            target,
            reference,
            k: ex.k,
            rates: ex.rates,
            seeds: ex.seeds,
            base_seed: ex.base_seed,
            distance: ex.distance.parse().map_err(|e: crate::views::ViewError| bad("experiment.distance", e.to_string()))?,
            rbo_p: ex.rbo_p,
            regen: ex.regen.parse().map_err(|e| bad("experiment.regen", e))?,
            rank_score: ex.rank_score.parse().map_err(|e| bad("experiment.rank_score", e))?,
            budgets,
            strategies,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.k == 0 {
            return bad("experiment.k must be at least 1".into());
        }
        if self.seeds == 0 {
            return bad("experiment.seeds must be at least 1".into());
        }
        if let Some(r) = self.rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("experiment.rates: {r} is outside [0, 1]"));
        }
        if !(self.rbo_p > 0.0 && self.rbo_p < 1.0) {
            return bad(format!("experiment.rbo_p: {} is outside (0, 1)", self.rbo_p));
        }
        if self.rates.is_empty() || self.budgets.is_empty() || self.strategies.is_empty() {
            return bad("rates, budgets and strategies must be non-empty".into());
        }
        self.target.validate(&self.schema).map_err(|e| HarnessError::Config(e.to_string()))?;
        self.reference.validate(&self.schema).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[dataset]
path = "heart.csv"
dimensions = ["sex", "cp"]
measures = ["age"]
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL, Path::new("/data")).unwrap();
        assert_eq!(c.dataset_name, "heart");
        assert_eq!(c.dataset_path, PathBuf::from("/data/heart.csv"));
        assert_eq!(c.k, 10);
        assert_eq!(c.rates, vec![0.2]);
        assert_eq!(c.seeds, 100);
        assert_eq!(c.budgets, vec![BudgetSpec::Fraction(0.1)]);
        assert_eq!(c.strategies.len(), 10);
        assert_eq!(c.regen, RegenMode::TopKPlusKHighest);
        assert_eq!(c.schema.aggregates(), &Aggregate::DEFAULT);
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
[dataset]
name = "toy"
path = "/abs/toy.csv"
dimensions = ["sex", "disease"]
measures = ["age", "chol"]
aggregates = ["avg", "count"]

[subsets]
target = "disease=Yes"
reference = "whole"

[experiment]
k = 5
rates = [0.1, 0.3]
seeds = 7
base_seed = 100
distance = "l1"
rbo_p = 0.8
regen = "top-k"
rank_score = "utility"
budgets = [{ kind = "cells", value = 12 }, { kind = "fraction", value = 0.5 }]

[strategies]
names = ["cell", "hybrid"]
"#;
        let c = ExperimentConfig::from_toml(text, Path::new("/ignored")).unwrap();
        assert_eq!(c.dataset_path, PathBuf::from("/abs/toy.csv"));
        assert_eq!(c.target, SubsetSpec::predicate("disease", "Yes"));
        assert_eq!(c.distance, DistanceKind::L1);
        assert_eq!(c.regen, RegenMode::TopK);
        assert_eq!(c.rank_score, RankScore::Utility);
        assert_eq!(c.budgets, vec![BudgetSpec::Cells(12), BudgetSpec::Fraction(0.5)]);
        assert_eq!(c.strategies, vec![StrategyKind::Cell, StrategyKind::Hybrid]);
        assert_eq!(c.schema.aggregates(), &[Aggregate::Avg, Aggregate::Count]);
    }

    #[test]
    fn bad_values_are_rejected() {
        let cases = [
            "[strategies]\nnames = [\"bogus\"]",
            "[subsets]\ntarget = \"age=3\"\nreference = \"whole\"",
            "[experiment]\nk = 0",
            "[experiment]\nrbo_p = 1.5",
            "[experiment]\nbudgets = [{ kind = \"rows\", value = 1 }]",
            "[experiment]\nrates = [1.2]",
            "[experiment]\nunknown_key = 1",
        ];
        for extra in cases {
            let text = format!("{MINIMAL}\n{extra}");
            assert!(ExperimentConfig::from_toml(&text, Path::new(".")).is_err(), "{extra}");
        }
    }
}
