//! `lenp report`: consolidate the outputs of `eval-metrics` and `bias-exp`
//! found in one directory. Explanation-quality totals are recomputed from
//! the per-sample CSV rather than copied from the summaries.

use std::path::Path;

use lenp::bias::BiasSummary;
use lenp::experiment::StrategySummary;
use lenp::metrics::{MeanCi, Provenance};
use serde::{Deserialize, Serialize};

use crate::eval::{morf_svg, read_samples, SampleRow, METRICS_FILE, SAMPLES_FILE};
use crate::output::{ensure_dir, read_json, write_json, write_text};
use crate::svg::{bar_chart, Bar};
use crate::{CliError, CliResult, ReportArgs};

const STRATEGIES: [Provenance; 3] = [Provenance::Len, Provenance::Lenp, Provenance::Surrogate];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub strategy: Provenance,
    pub n_samples: usize,
    pub auc_morf: MeanCi,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_sens: Option<MeanCi>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub setting: String,
    pub n_trials: usize,
    pub n_biased: usize,
    pub rates: Vec<(Provenance, MeanCi)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub quality: Vec<QualityRow>,
    pub bias: Vec<BiasRow>,
}

/// Per-strategy means with 95% intervals, from per-sample rows.
pub fn quality_rows(rows: &[SampleRow]) -> Vec<QualityRow> {
    STRATEGIES
        .into_iter()
        .filter_map(|s| {
            let mine: Vec<&SampleRow> = rows.iter().filter(|r| r.strategy == s).collect();
            if mine.is_empty() {
                return None;
            }
            let auc: Vec<f64> = mine.iter().map(|r| r.auc_morf).collect();
            let sens: Option<Vec<f64>> = mine.iter().map(|r| r.max_sens).collect();
            Some(QualityRow {
                strategy: s,
                n_samples: mine.len(),
                auc_morf: MeanCi::of(&auc),
                max_sens: sens.map(|v| MeanCi::of(&v)),
            })
        })
        .collect()
}

fn csv_lines(report: &Report) -> String {
    let mut out = String::from("section,setting,strategy,metric,mean,half_width,n\n");
    let mut push = |section: &str, setting: &str, s: Provenance, metric: &str, m: MeanCi| {
        out.push_str(&format!("{section},{setting},{},{metric},{},{},{}\n", s.name(), m.mean, m.half_width, m.n));
    };
    for q in &report.quality {
        push("quality", "", q.strategy, "auc_morf", q.auc_morf);
        if let Some(m) = q.max_sens {
            push("quality", "", q.strategy, "max_sens", m);
        }
    }
    for b in &report.bias {
        for &(s, m) in &b.rates {
            push("bias", &b.setting, s, "detection_rate", m);
        }
    }
    out
}

fn bias_files(run: &Path) -> CliResult<Vec<BiasSummary>> {
    let mut out = Vec::new();
    for setting in ["s1", "s2"] {
        let path = run.join(format!("bias_{setting}.json"));
        if path.is_file() {
            out.push(read_json(&path)?);
        }
    }
    Ok(out)
}

pub fn run(a: &ReportArgs) -> CliResult<()> {
    if !a.run.is_dir() {
        return Err(CliError::usage(format!("{} is not a directory", a.run.display())));
    }
    let samples_path = a.run.join(SAMPLES_FILE);
    let samples = if samples_path.is_file() { Some(read_samples(&samples_path)?) } else { None };
    let bias = bias_files(&a.run)?;
    if samples.is_none() && bias.is_empty() {
        return Err(CliError::usage(format!(
            "{} holds no {SAMPLES_FILE} or bias_s*.json; run eval-metrics or bias-exp first",
            a.run.display()
        )));
    }

    let report = Report {
        quality: samples.as_deref().map(quality_rows).unwrap_or_default(),
        bias: bias
            .iter()
            .map(|b| BiasRow {
                setting: b.setting.name.clone(),
                n_trials: b.n_trials,
                n_biased: b.n_biased,
                rates: b.rates.clone(),
            })
            .collect(),
    };

    let out = a.out.as_deref().unwrap_or(&a.run);
    ensure_dir(out)?;
    write_json(&out.join("report.json"), &report)?;
    write_text(&out.join("report.csv"), &csv_lines(&report))?;

    if !report.quality.is_empty() {
        let bars: Vec<Bar> = report
            .quality
            .iter()
            .map(|q| Bar { label: q.strategy.label().into(), value: q.auc_morf.mean, half_width: q.auc_morf.half_width })
            .collect();
        write_text(&out.join("auc_morf.svg"), &bar_chart("AUC-MoRF (lower is better)", "AUC-MoRF", &bars))?;
        let metrics_path = a.run.join(METRICS_FILE);
        if metrics_path.is_file() {
            #[derive(Deserialize)]
            struct Curves {
                summary: Vec<StrategySummary>,
            }
            let curves: Curves = read_json(&metrics_path)?;
            write_text(&out.join("morf.svg"), &morf_svg(&curves.summary))?;
        }
    }
    if !report.bias.is_empty() {
        let bars: Vec<Bar> = report
            .bias
            .iter()
            .flat_map(|b| {
                b.rates.iter().map(move |(s, m)| Bar {
                    label: format!("{} {}", b.setting, s.label()),
                    value: m.mean,
                    half_width: m.half_width,
                })
            })
            .collect();
        write_text(&out.join("bias.svg"), &bar_chart("Biased-model detection rate", "detected (%)", &bars))?;
    }

    for q in &report.quality {
        println!(
            "{:<6} n={:<4} AUC-MoRF {:.4} ± {:.4}",
            q.strategy.label(),
            q.n_samples,
            q.auc_morf.mean,
            q.auc_morf.half_width
        );
    }
    for b in &bias {
        println!("{b}");
    }
    Ok(())
}
