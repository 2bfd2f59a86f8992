//! Desk-scale experiment pipelines shared by the CLI and the test suites:
//! corpus generation and splitting, black-box fitting and distillation,
//! per-sample explanation metrics, and synthetic rule recovery.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::{fit_forest, Forest, ForestConfig};
use crate::data::synthetic::{self, CorpusConfig};
use crate::data::{split, Dataset, Fractions, LabelSet};
use crate::explain::{self, len_local, lenp_local_with, GlobalConfig};
use crate::logic::Dnf;
use crate::metrics::{self, MeanCi, Provenance};
use crate::neural::{train, EntropyLenModel, TrainConfig};
use crate::surrogate::{surrogate_local, SurrogateConfig};
use crate::{rng, Error, Predictor, Result};

/// The generated corpus and how it is encoded and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSetup {
    pub corpus: CorpusConfig,
    pub corpus_seed: u64,
    pub max_features: usize,
    pub min_doc_freq: usize,
    pub fractions: Fractions,
    pub split_seed: u64,
}

impl Default for CorpusSetup {
    fn default() -> Self {
        Self {
            corpus: CorpusConfig::default(),
            corpus_seed: 0,
            max_features: 300,
            min_doc_freq: 3,
            fractions: Fractions { train: 0.7, val: 0.1, test: 0.2 },
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

pub fn build_splits(setup: &CorpusSetup) -> Result<Splits> {
    let docs = synthetic::tag_corpus(&setup.corpus, setup.corpus_seed);
    let ds = Dataset::from_documents(&docs, setup.max_features, setup.min_doc_freq, Some(setup.corpus.tag_names()))?;
    let (train, val, test) = split(&ds, setup.fractions, setup.split_seed)?;
    Ok(Splits { train, val, test })
}

/// Hard labels of `model` at 0.5.
pub fn predicted_labels(model: &dyn Predictor, ds: &Dataset) -> Vec<LabelSet> {
    ds.examples
        .par_iter()
        .map(|e| LabelSet::from_indices(model.predict_proba(&e.concepts).iter().enumerate().filter(|(_, &p)| p >= 0.5).map(|(c, _)| c)))
        .collect()
}

/// Trains the entropy network on the black box's hard labels.
pub fn distill(black_box: &dyn Predictor, ds: &Dataset, cfg: &TrainConfig) -> Result<EntropyLenModel> {
    train(&ds.relabel(predicted_labels(black_box, ds)), cfg)
}

/// Network settings for the tag corpus. A high temperature keeps the
/// relevant set wide enough to carry negated cues of competing tags, which
/// the refined explanations need in order to be faithful to the black box.
pub fn corpus_train_config() -> TrainConfig {
    TrainConfig { temperature: 10.0, learning_rate: 0.05, entropy_weight: 0.03, ..Default::default() }
}

/// A forest and the entropy network distilled from it on the training split.
pub struct BlackBoxSetup {
    pub forest: Forest,
    pub len: EntropyLenModel,
}

pub fn fit_black_box(train_set: &Dataset, forest: &ForestConfig, net: &TrainConfig) -> Result<BlackBoxSetup> {
    let forest = fit_forest(train_set, forest)?;
    let len = distill(&forest, train_set, net)?;
    Ok(BlackBoxSetup { forest, len })
}

/// Knobs of the per-sample explanation evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub n_explained: usize,
    pub morf_length: usize,
    pub radius: f64,
    pub n_perturbations: usize,
    pub surrogate: SurrogateConfig,
    /// Rank the terms a refined explanation discarded after all others.
    pub demote_bad_terms: bool,
    pub with_sensitivity: bool,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_explained: 100,
            morf_length: 10,
            radius: 0.02,
            n_perturbations: 10,
            surrogate: SurrogateConfig::default(),
            demote_bad_terms: false,
            with_sensitivity: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: usize,
    pub class: usize,
    pub strategy: Provenance,
    pub ranking: Vec<usize>,
    pub curve: Vec<f64>,
    pub auc_morf: f64,
    pub max_sens: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Provenance,
    pub auc_morf: MeanCi,
    pub max_sens: Option<MeanCi>,
    pub mean_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<SampleRecord>,
    pub summary: Vec<StrategySummary>,
}

impl EvalReport {
    pub fn strategy(&self, s: Provenance) -> Option<&StrategySummary> {
        self.summary.iter().find(|x| x.strategy == s)
    }

    pub fn summarize(records: Vec<SampleRecord>) -> Self {
        let summary = [Provenance::Len, Provenance::Lenp, Provenance::Surrogate]
            .into_iter()
            .filter_map(|s| {
                let rs: Vec<&SampleRecord> = records.iter().filter(|r| r.strategy == s).collect();
                if rs.is_empty() {
                    return None;
                }
                let aucs: Vec<f64> = rs.iter().map(|r| r.auc_morf).collect();
                let sens: Option<Vec<f64>> = rs.iter().map(|r| r.max_sens).collect();
                let len = rs.iter().map(|r| r.curve.len()).min().unwrap_or(0);
                let mean_curve = (0..len).map(|k| rs.iter().map(|r| r.curve[k]).sum::<f64>() / rs.len() as f64).collect();
                Some(StrategySummary { strategy: s, auc_morf: MeanCi::of(&aucs), max_sens: sens.map(|v| MeanCi::of(&v)), mean_curve })
            })
            .collect();
        Self { records, summary }
    }
}

/// Stable 64-bit FNV-1a hash of an input vector, for per-input seeds.
pub fn input_hash(x: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Indices of the explained samples: a seeded subset of `n` rows, ascending.
pub fn pick_samples(n_rows: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut r = rng::stream(seed, 0x5A3);
    let mut idx = index::sample(&mut r, n_rows, n.min(n_rows)).into_vec();
    idx.sort_unstable();
    idx
}

/// Class explained for an input: the one the black box rates highest.
pub fn explained_class(model: &dyn Predictor, x: &[f64]) -> usize {
    let p = model.predict_proba(x);
    (0..p.len()).fold(0, |best, c| if p[c] > p[best] { c } else { best })
}

/// AUC-MoRF (and optionally max-sensitivity) of the three explainers on a
/// seeded sample of `samples`, all measured against `black_box`. The logic
/// explainers read relevance from `len`; the refined one also flips terms on
/// `black_box`.
pub fn evaluate_explanations(
    len: &EntropyLenModel,
    black_box: &dyn Predictor,
    samples: &Dataset,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples to explain"));
    }
    let d = samples.n_features();
    if cfg.morf_length == 0 || cfg.morf_length > d {
        return Err(Error::invalid(format!("MoRF length must be in 1..={d}")));
    }
    let ids = pick_samples(samples.len(), cfg.n_explained, cfg.seed);
    let per_sample: Vec<Vec<SampleRecord>> = ids
        .par_iter()
        .map(|&i| explain_sample(len, black_box, &samples.examples[i].concepts, i, cfg))
        .collect::<Result<_>>()?;
    Ok(EvalReport::summarize(per_sample.into_iter().flatten().collect()))
}

fn explain_sample(
    len: &EntropyLenModel,
    black_box: &dyn Predictor,
    x: &[f64],
    sample_id: usize,
    cfg: &EvalConfig,
) -> Result<Vec<SampleRecord>> {
    let d = x.len();
    let class = explained_class(black_box, x);
    let alpha_tilde = len.alpha_scores(class)?.alpha_tilde;
    let sample_seed = rng::derive_seed(cfg.seed, sample_id as u64);
    let surrogate_seed = |y: &[f64]| rng::derive_seed(sample_seed, input_hash(y));

    let plain = len_local(len, x, class)?;
    let refined = lenp_local_with(len, black_box, x, class)?;
    let demoted: Vec<usize> = if cfg.demote_bad_terms { refined.bad.iter().map(|l| l.feature).collect() } else { Vec::new() };
    let weights = surrogate_local(black_box, x, class, &cfg.surrogate, surrogate_seed(x))?;

    let rankings = [
        (Provenance::Len, metrics::logic_ranking(&plain, &[], &alpha_tilde, cfg.morf_length, Provenance::Len)?),
        (Provenance::Lenp, metrics::logic_ranking(&refined.good, &demoted, &alpha_tilde, cfg.morf_length, Provenance::Lenp)?),
        (Provenance::Surrogate, metrics::weight_ranking(&weights, d, cfg.morf_length)?),
    ];
    let mut out = Vec::with_capacity(3);
    for (strategy, ranking) in rankings {
        let curve = metrics::morf_curve(black_box, x, class, &ranking)?;
        let max_sens = if cfg.with_sensitivity {
            let explainer = |y: &[f64]| -> Result<Vec<f64>> {
                Ok(match strategy {
                    Provenance::Len => metrics::embed_conjunction(&len_local(len, y, class)?, d),
                    Provenance::Lenp => metrics::embed_conjunction(&lenp_local_with(len, black_box, y, class)?.good, d),
                    Provenance::Surrogate => {
                        metrics::embed_weights(&surrogate_local(black_box, y, class, &cfg.surrogate, surrogate_seed(y))?, d)
                    }
                })
            };
            Some(metrics::max_sensitivity(&explainer, x, cfg.radius, cfg.n_perturbations, sample_seed)?)
        } else {
            None
        };
        out.push(SampleRecord { sample_id, class, strategy, ranking: ranking.ids, auc_morf: curve.auc_normalized, curve: curve.values, max_sens });
    }
    Ok(out)
}

/// Setup of the synthetic rule-recovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleRecoveryConfig {
    pub n: usize,
    pub d: usize,
    pub fractions: Fractions,
    pub train: TrainConfig,
    pub global: GlobalConfig,
}

impl Default for RuleRecoveryConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            d: 10,
            fractions: Fractions { train: 0.7, val: 0.15, test: 0.15 },
            // few features and a sharp rule: a light entropy penalty avoids
            // collapsing the importance onto a single input early on
            train: TrainConfig { entropy_weight: 0.001, ..Default::default() },
            global: GlobalConfig::default(),
        }
    }
}

/// Trains on `y = x1 ∧ x2` and returns the class's global explanation.
pub fn rule_recovery(cfg: &RuleRecoveryConfig, seed: u64) -> Result<Dnf> {
    let ds = synthetic::and_task(cfg.n, cfg.d, seed)?;
    let (train_set, val, _) = split(&ds, cfg.fractions, seed)?;
    let model = train(&train_set, &TrainConfig { seed, ..cfg.train.clone() })?;
    explain::global_explanation(&model, &model, &train_set, &val, 0, &cfg.global)
}
