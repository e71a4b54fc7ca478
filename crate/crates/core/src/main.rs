use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use insight_impute::harness::{emit_report, run_experiment, ExperimentConfig};
use insight_impute::imputation::BudgetSpec;
use insight_impute::pipeline::{run_flow, FlowConfig, RegenMode};
use insight_impute::priority::{StrategyKind, StrategyRegistry};
use insight_impute::tabular::{inject_mcar, load_dataset, Aggregate, Schema, SubsetSpec};
use insight_impute::views::{rank_views, DistanceKind};
use insight_impute::worked_examples;

#[derive(Parser, Debug)]
#[command(name = "insight-impute", version, about = "Budgeted imputation for top-k view recommendation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank every view of a CSV and print the top k.
    Rank(DataArgs),
    /// Inject a seeded MCAR mask, run one strategy and print its plan.
    Impute {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "cell-f")]
        strategy: StrategyKind,
        /// Cell count (`25`) or fraction of missing cells (`10%`, `0.1`).
        #[arg(long, default_value = "10%")]
        budget: BudgetSpec,
        #[arg(long, default_value_t = 0.2)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "top-k-plus-k-highest")]
        regen: RegenMode,
    },
    /// Run a full sweep from a config file and write trials.csv and aggregates.csv.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Overrides the configured seed count.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        rbo_p: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Replay the golden grid fixtures and print one line per check.
    WorkedExamples,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Config file supplying the dataset, schema and subsets.
    #[arg(long, conflicts_with_all = ["dataset", "schema"])]
    config: Option<PathBuf>,
    #[arg(long, requires = "schema")]
    dataset: Option<PathBuf>,
    /// `dims=a,b;measures=x,y[;aggs=avg,sum]`
    #[arg(long)]
    schema: Option<String>,
    #[arg(long, default_value = "whole")]
    target: SubsetSpec,
    #[arg(long, default_value = "whole")]
    reference: SubsetSpec,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value = "l2")]
    distance: DistanceKind,
}

fn parse_schema(text: &str) -> Result<Schema, String> {
    let (mut dims, mut measures, mut aggs) = (Vec::new(), Vec::new(), Aggregate::DEFAULT.to_vec());
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, list) = part.split_once('=').ok_or_else(|| format!("bad schema part `{part}`"))?;
        let items: Vec<String> = list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        match key.trim() {
            "dims" | "dimensions" => dims = items,
            "measures" => measures = items,
            "aggs" | "aggregates" => {
                aggs = items.iter().map(|a| a.parse::<Aggregate>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?
            }
            other => return Err(format!("unknown schema key `{other}`")),
        }
    }
    Schema::new(dims, measures, aggs).map_err(|e| e.to_string())
}

struct Resolved {
    path: PathBuf,
    schema: Schema,
    target: SubsetSpec,
    reference: SubsetSpec,
}

fn resolve_data(args: &DataArgs) -> Result<Resolved, String> {
    if let Some(config) = &args.config {
        let c = ExperimentConfig::from_file(config).map_err(|e| e.to_string())?;
        return Ok(Resolved {
            path: c.dataset_path,
            schema: c.schema,
            target: c.target,
            reference: c.reference,
        });
    }
    let (Some(path), Some(schema)) = (&args.dataset, &args.schema) else {
        return Err("either --config or --dataset with --schema is required".into());
    };
    Ok(Resolved {
        path: path.clone(),
        schema: parse_schema(schema)?,
        target: args.target.clone(),
        reference: args.reference.clone(),
    })
}

fn rank(args: &DataArgs) -> Result<(), String> {
    let r = resolve_data(args)?;
    let ds = Arc::new(load_dataset(&r.path, r.schema).map_err(|e| e.to_string())?);
    let complete = insight_impute::tabular::MaskedDataset::complete(ds);
    let ranking = rank_views(&complete, &r.target, &r.reference, args.distance).map_err(|e| e.to_string())?;
    println!("rank,view,utility");
    for (i, e) in ranking.top_k(args.k).entries().iter().enumerate() {
        println!("{},{},{}", i + 1, e.spec, e.utility);
    }
    Ok(())
}

fn impute(
    args: &DataArgs,
    strategy: StrategyKind,
    budget: &BudgetSpec,
    rate: f64,
    seed: u64,
    regen: RegenMode,
) -> Result<(), String> {
    let r = resolve_data(args)?;
    let ds = Arc::new(load_dataset(&r.path, r.schema).map_err(|e| e.to_string())?);
    let masked = inject_mcar(ds, rate, seed).map_err(|e| e.to_string())?;
    let mut flow = FlowConfig::new(args.k, r.target, r.reference);
    flow.distance = args.distance;
    flow.regen = regen;
    let s = StrategyRegistry::builtin().resolve(strategy).map_err(|e| e.to_string())?;
    let missing = masked.missing_count();
    let rec = run_flow(masked, budget, s.as_ref(), &flow, seed).map_err(|e| e.to_string())?;
    eprintln!(
        "{strategy}: {} of {missing} missing cells imputed, {} priority evaluations, {} view executions",
        rec.costs.cells_imputed,
        rec.costs.priority_evaluations,
        rec.costs.view_executions_temp + rec.costs.view_executions_final
    );
    println!("step,row,column,score");
    for (i, step) in rec.plan.steps.iter().enumerate() {
        println!("{},{},{},{}", i + 1, step.cell.row, step.cell.column, step.score);
    }
    Ok(())
}

fn experiment(config: &Path, out: &Path, seeds: Option<u64>, rbo_p: Option<f64>, k: Option<usize>) -> Result<(), String> {
    let mut c = ExperimentConfig::from_file(config).map_err(|e| e.to_string())?;
    if let Some(s) = seeds {
        c.seeds = s;
    }
    if let Some(p) = rbo_p {
        c.rbo_p = p;
    }
    if let Some(k) = k {
        c.k = k;
    }
    let report = run_experiment(&c).map_err(|e| e.to_string())?;
    let (t, a) = emit_report(&report, out).map_err(|e| e.to_string())?;
    for row in &report.aggregates {
        println!(
            "{:<10} rate={} budget={:<6} jaccard={:.4} rbo={:.4}",
            row.strategy, row.rate, row.budget, row.jaccard_mean, row.rbo_mean
        );
    }
    eprintln!("wrote {} and {}", t.display(), a.display());
    Ok(())
}

fn worked() -> Result<(), String> {
    let checks = worked_examples::all_checks();
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if failed > 0 {
        return Err(format!("{failed} of {} checks failed", checks.len()));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Rank(args) => rank(args),
        Command::Impute {
            data,
            strategy,
            budget,
            rate,
            seed,
            regen,
        } => impute(data, *strategy, budget, *rate, *seed, *regen),
        Command::Experiment {
            config,
            out,
            seeds,
            rbo_p,
            k,
        } => experiment(config, out, *seeds, *rbo_p, *k),
        Command::WorkedExamples => worked(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
