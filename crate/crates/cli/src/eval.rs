//! `lenp eval-metrics`: per-sample AUC-MoRF and max-sensitivity of every
//! explanation strategy on the test split.

use std::path::Path;

use lenp::experiment::{evaluate_explanations, EvalConfig, SampleRecord, StrategySummary};
use lenp::metrics::Provenance;
use serde::{Deserialize, Serialize};

use crate::config::{self, RunConfig};
use crate::output::{ensure_dir, load_splits, write_json, write_text, ModelDir};
use crate::svg::line_chart;
use crate::{CliError, CliResult, Command, EvalArgs};

pub const METRICS_FILE: &str = "metrics.json";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const MORF_SVG: &str = "morf.svg";

/// One line of `samples.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub sample_id: usize,
    pub strategy: Provenance,
    pub auc_morf: f64,
    pub max_sens: Option<f64>,
}

impl From<&SampleRecord> for SampleRow {
    fn from(r: &SampleRecord) -> Self {
        Self { sample_id: r.sample_id, strategy: r.strategy, auc_morf: r.auc_morf, max_sens: r.max_sens }
    }
}

#[derive(Serialize)]
struct Metrics<'a> {
    config: &'a EvalConfig,
    black_box: &'static str,
    n_samples: usize,
    summary: &'a [StrategySummary],
}

pub fn write_samples(path: &Path, rows: impl IntoIterator<Item = SampleRow>) -> CliResult<()> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_samples(path: &Path) -> CliResult<Vec<SampleRow>> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

pub fn morf_svg(summary: &[StrategySummary]) -> String {
    let series: Vec<(String, Vec<f64>)> =
        summary.iter().map(|s| (s.strategy.label().to_string(), s.mean_curve.clone())).collect();
    line_chart("Mean MoRF curve", "features removed", "probability of the explained class", &series)
}

pub fn run(a: &EvalArgs, mut cfg: RunConfig, cmd: &Command) -> CliResult<()> {
    let e = &mut cfg.eval;
    if let Some(v) = a.n_explained {
        e.n_explained = v;
    }
    if let Some(v) = a.morf_length {
        e.morf_length = v;
    }
    if let Some(v) = a.radius {
        e.radius = v;
    }
    if let Some(v) = a.n_perturbations {
        e.n_perturbations = v;
    }
    if a.no_sensitivity {
        e.with_sensitivity = false;
    }
    let splits = load_splits(&a.data)?;
    let dir = ModelDir::load(&a.model)?;
    ensure_dir(&a.out)?;

    let report = evaluate_explanations(&dir.model, dir.oracle(), &splits.test, &cfg.eval)?;
    let n_samples = report.records.iter().filter(|r| r.strategy == Provenance::Len).count();
    write_json(
        &a.out.join(METRICS_FILE),
        &Metrics {
            config: &cfg.eval,
            black_box: if dir.forest.is_some() { "forest" } else { "network" },
            n_samples,
            summary: &report.summary,
        },
    )?;
    write_samples(&a.out.join(SAMPLES_FILE), report.records.iter().map(SampleRow::from))?;
    write_text(&a.out.join(MORF_SVG), &morf_svg(&report.summary))?;
    config::capture(&a.out, "eval_config.json", cmd, &cfg)?;

    for s in &report.summary {
        let sens = s.max_sens.map_or("-".to_string(), |m| format!("{:.4} ± {:.4}", m.mean, m.half_width));
        println!(
            "{:<10} AUC-MoRF {:.4} ± {:.4}   max-sensitivity {sens}",
            s.strategy.label(),
            s.auc_morf.mean,
            s.auc_morf.half_width
        );
    }
    Ok(())
}
