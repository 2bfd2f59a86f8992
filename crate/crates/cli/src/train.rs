//! `lenp train`: fit the entropy network (and the forest in black-box mode).

use std::collections::BTreeMap;

use lenp::blackbox::fit_forest;
use lenp::data::{Dataset, LabelSet};
use lenp::experiment::predicted_labels;
use lenp::metrics::multilabel_scores;
use lenp::neural::{train_with_history, Optimizer, TrainConfig};
use lenp::Predictor;
use serde::Serialize;

use crate::config::{self, RunConfig};
use crate::output::{self, ensure_dir, load_splits, write_json};
use crate::{CliResult, Command, OptimizerArg, TrainArgs};

#[derive(Debug, Serialize)]
struct SplitMetrics {
    /// Exact match of the whole tag set.
    accuracy: f64,
    micro_f1: f64,
}

#[derive(Debug, Serialize)]
struct TrainLog<'a> {
    mode: &'static str,
    config: &'a TrainConfig,
    losses: Vec<f64>,
    /// The network against the true labels.
    network: BTreeMap<&'static str, SplitMetrics>,
    /// The forest against the true labels (black-box mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    forest: Option<BTreeMap<&'static str, SplitMetrics>>,
    /// The network against the forest's decisions (black-box mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<BTreeMap<&'static str, SplitMetrics>>,
}

fn split_metrics(model: &dyn Predictor, ds: &Dataset, labels: &[LabelSet]) -> CliResult<SplitMetrics> {
    let probs: Vec<Vec<f64>> = ds.examples.iter().map(|e| model.predict_proba(&e.concepts)).collect();
    let predicted = predicted_labels(model, ds);
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(SplitMetrics {
        accuracy: if labels.is_empty() { 0.0 } else { hits as f64 / labels.len() as f64 },
        micro_f1: multilabel_scores(&probs, labels)?.f1,
    })
}

fn apply_overrides(a: &TrainArgs, t: &mut TrainConfig) {
    if let Some(v) = a.epochs {
        t.epochs = v;
    }
    if let Some(v) = a.lr {
        t.learning_rate = v;
    }
    if let Some(v) = a.lambda {
        t.entropy_weight = v;
    }
    if let Some(v) = a.tau {
        t.temperature = v;
    }
    if let Some(v) = a.batch_size {
        t.batch_size = Some(v);
    }
    if let Some(v) = &a.hidden {
        t.hidden_sizes = v.clone();
    }
    if let Some(v) = a.optimizer {
        t.optimizer = match v {
            OptimizerArg::Momentum => Optimizer::Momentum,
            OptimizerArg::Adam => Optimizer::Adam,
        };
    }
}

pub fn run(a: &TrainArgs, mut cfg: RunConfig, cmd: &Command) -> CliResult<()> {
    let splits = load_splits(&a.data)?;
    if let Some(n) = a.trees {
        cfg.forest.n_trees = n;
    }
    let net_cfg = if a.explain_blackbox { &mut cfg.distill } else { &mut cfg.train };
    apply_overrides(a, net_cfg);
    let net_cfg = net_cfg.clone();
    ensure_dir(&a.out)?;

    let named = [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)];
    let truth = |ds: &Dataset| -> Vec<LabelSet> { ds.examples.iter().map(|e| e.labels).collect() };

    let (model, losses, forest) = if a.explain_blackbox {
        let forest = fit_forest(&splits.train, &cfg.forest)?;
        let student = splits.train.relabel(predicted_labels(&forest, &splits.train));
        let (model, report) = train_with_history(&student, &net_cfg)?;
        (model, report.losses, Some(forest))
    } else {
        let (model, report) = train_with_history(&splits.train, &net_cfg)?;
        (model, report.losses, None)
    };

    let mut network = BTreeMap::new();
    for (name, ds) in named {
        network.insert(name, split_metrics(&model, ds, &truth(ds))?);
    }
    let (forest_metrics, fidelity) = match &forest {
        Some(f) => {
            let mut fm = BTreeMap::new();
            let mut fid = BTreeMap::new();
            for (name, ds) in named {
                fm.insert(name, split_metrics(f, ds, &truth(ds))?);
                fid.insert(name, split_metrics(&model, ds, &predicted_labels(f, ds))?);
            }
            (Some(fm), Some(fid))
        }
        None => (None, None),
    };

    model.save(a.out.join(output::MODEL_FILE))?;
    if let Some(f) = &forest {
        f.save(a.out.join(output::FOREST_FILE))?;
    }
    let log = TrainLog {
        mode: if a.explain_blackbox { "black-box" } else { "self-explaining" },
        config: &net_cfg,
        losses,
        network,
        forest: forest_metrics,
        fidelity,
    };
    write_json(&a.out.join("train_log.json"), &log)?;
    config::capture(&a.out, "config.json", cmd, &cfg)?;

    for (name, m) in &log.network {
        eprintln!("{name}: accuracy {:.4}, micro-F1 {:.4}", m.accuracy, m.micro_f1);
    }
    if let Some(fid) = &log.fidelity {
        for (name, m) in fid {
            eprintln!("{name}: fidelity to the forest {:.4}", m.accuracy);
        }
    }
    Ok(())
}
