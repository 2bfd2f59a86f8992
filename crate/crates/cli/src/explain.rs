//! `lenp explain local|global`. The JSON record goes to stdout (and to
//! `--out`), a short human-readable summary to stderr.

use lenp::explain::{global_report, local_report, Aggregation, Strategy};
use lenp::logic::Objective;
use lenp::neural::AlphaMode;

use crate::config::RunConfig;
use crate::output::{class_index, load_splits, to_json_string, write_text, ModelDir};
use crate::{AggArg, CliResult, ExplainArgs, ExplainCommon, ExplainScope, ObjectiveArg, SplitArg, StrategyArg};

fn strategy(s: Option<StrategyArg>, default: Strategy) -> Strategy {
    match s {
        Some(StrategyArg::Len) => Strategy::Len,
        Some(StrategyArg::Lenp) => Strategy::Lenp,
        None => default,
    }
}

fn emit(common: &ExplainCommon, json: &str) -> CliResult<()> {
    print!("{json}");
    if let Some(path) = &common.out {
        write_text(path, json)?;
    }
    Ok(())
}

fn load_model(common: &ExplainCommon) -> CliResult<ModelDir> {
    let mut dir = ModelDir::load(&common.model)?;
    if common.alpha_raw {
        dir.model.alpha_mode = AlphaMode::Raw;
    }
    Ok(dir)
}

pub fn run(a: &ExplainArgs, cfg: RunConfig) -> CliResult<()> {
    match &a.scope {
        ExplainScope::Local { common, input, split } => {
            let splits = load_splits(&common.data)?;
            let ds = match split {
                SplitArg::Train => &splits.train,
                SplitArg::Val => &splits.val,
                SplitArg::Test => &splits.test,
            };
            let class = class_index(ds, &common.class)?;
            let dir = load_model(common)?;
            let report =
                local_report(&dir.model, dir.oracle(), ds, *input, class, strategy(common.strategy, cfg.global.strategy))?;
            if let Some(q) = &report.question {
                eprintln!("Question: {q}");
            }
            eprintln!("Predicted Tags: {}", report.predicted_tags.join(", "));
            eprintln!("Explanation for {} (p = {:.3}): {}", report.class, report.probability, report.explanation);
            for note in &report.annotations {
                eprintln!("  {note}");
            }
            emit(common, &to_json_string(&report))
        }
        ExplainScope::Global { common, k, agg, objective } => {
            let splits = load_splits(&common.data)?;
            let class = class_index(&splits.train, &common.class)?;
            let dir = load_model(common)?;
            let mut g = cfg.global;
            g.strategy = strategy(common.strategy, g.strategy);
            if let Some(k) = k {
                g.k = *k;
            }
            if let Some(agg) = agg {
                g.aggregation = match agg {
                    AggArg::Greedy => Aggregation::Greedy,
                    AggArg::Powerset => Aggregation::Powerset,
                };
            }
            if let Some(o) = objective {
                g.objective = match o {
                    ObjectiveArg::Accuracy => Objective::Accuracy,
                    ObjectiveArg::F1 => Objective::F1,
                };
            }
            let report = global_report(&dir.model, dir.oracle(), &splits.train, &splits.val, Some(&splits.test), class, &g)?;
            for c in &report.candidates {
                eprintln!("  {:>5}  {}", c.count, c.rendered);
            }
            eprintln!("{} <- {}", report.class, report.explanation);
            eprintln!("validation score {:.4}, test accuracy {:.4}", report.val_score, report.test_accuracy.unwrap_or(f64::NAN));
            emit(common, &to_json_string(&report))
        }
    }
}
