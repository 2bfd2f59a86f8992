//! Biased-model detection: spurious columns are planted in the training and
//! validation data of one tag but appear at random at test time. A model that
//! learned them scores clearly better on validation than on test; such runs
//! are kept and each global explanation strategy is asked whether it exposes
//! the planted columns.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{append_noise_columns, Dataset, NoiseMode, NoiseSpec};
use crate::experiment::{build_splits, CorpusSetup};
use crate::explain::{global_explanation, Aggregation, GlobalConfig, Strategy};
use crate::logic::{Dnf, Objective};
use crate::metrics::{class_confusion, MeanCi, Provenance};
use crate::neural::{train, EntropyLenModel, TrainConfig};
use crate::surrogate::{submodular_pick, surrogate_local, SurrogateConfig};
use crate::{rng, Error, Predictor, Result};

/// Strength of the planted bias and the score gap a run must show.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSetting {
    pub name: String,
    pub count: usize,
    pub p_target: f64,
    pub p_other: f64,
    pub f1_gap_threshold: f64,
}

impl BiasSetting {
    pub fn s1() -> Self {
        Self { name: "S1".into(), count: 2, p_target: 0.30, p_other: 0.05, f1_gap_threshold: 0.03 }
    }

    pub fn s2() -> Self {
        Self { name: "S2".into(), count: 2, p_target: 0.35, p_other: 0.05, f1_gap_threshold: 0.05 }
    }

    /// `"s1"` / `"s2"`, case-insensitive.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "s1" => Ok(Self::s1()),
            "s2" => Ok(Self::s2()),
            other => Err(Error::invalid(format!("unknown bias setting {other:?} (expected s1 or s2)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::invalid("bias setting needs at least one noisy feature"));
        }
        if !(0.0..=1.0).contains(&self.p_target) || !(0.0..=1.0).contains(&self.p_other) {
            return Err(Error::invalid("noise probabilities must lie in [0, 1]"));
        }
        if self.p_target <= self.p_other {
            return Err(Error::invalid(format!(
                "p_target ({}) must exceed p_other ({})",
                self.p_target, self.p_other
            )));
        }
        if !(self.f1_gap_threshold > 0.0) {
            return Err(Error::invalid("F1 gap threshold must be positive"));
        }
        Ok(())
    }
}

/// Everything besides the setting that shapes a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasConfig {
    pub corpus: CorpusSetup,
    pub train: TrainConfig,
    /// Tag whose rows carry the planted columns; its explanations are inspected.
    pub target_class: usize,
    /// Clauses kept before aggregation for both logic strategies.
    pub k: usize,
    pub surrogate: SurrogateConfig,
    /// Validation rows explained by the surrogate before picking.
    pub surrogate_explained: usize,
    /// Explanations kept by the submodular pick.
    pub pick_budget: usize,
    /// Attempts per trial before giving up on producing a biased model.
    pub retry_cap: usize,
    pub rule: DetectionRule,
    /// Aggregation objective of both logic strategies on the validation split.
    pub objective: Objective,
}

/// When a global explanation counts as exposing a noisy feature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionRule {
    /// The feature occurs in the formula (either polarity) or among the
    /// surrogate's largest-magnitude weights.
    #[default]
    Mention,
    /// The feature is used as evidence for the class: a positive literal, or
    /// a positive surrogate weight.
    Evidence,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            corpus: CorpusSetup::default(),
            train: bias_train_config(),
            target_class: 0,
            k: 5,
            surrogate: SurrogateConfig { n_samples: 500, ..Default::default() },
            surrogate_explained: 40,
            pick_budget: 5,
            retry_cap: 50,
            rule: DetectionRule::default(),
            objective: Objective::Accuracy,
        }
    }
}

/// Network settings for the biased-model runs: a narrow gated layer and
/// a short schedule, so the planted columns compete with the tag words for
/// relevance instead of being memorized alongside everything else.
pub fn bias_train_config() -> TrainConfig {
    TrainConfig { hidden_sizes: vec![10], epochs: 50, entropy_weight: 0.03, ..Default::default() }
}

/// What each strategy showed on an accepted (biased) run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub len: bool,
    pub lenp: bool,
    pub surrogate: bool,
    pub len_formula: String,
    pub lenp_formula: String,
    pub surrogate_features: Vec<String>,
}

impl Detection {
    pub fn get(&self, p: Provenance) -> bool {
        match p {
            Provenance::Len => self.len,
            Provenance::Lenp => self.lenp,
            Provenance::Surrogate => self.surrogate,
        }
    }
}

/// Outcome of one trial. `detection` is present exactly when `biased`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    /// Seed of the accepted attempt (or of the last one tried).
    pub seed: u64,
    pub attempts: usize,
    pub biased: bool,
    pub f1_val: f64,
    pub f1_test: f64,
    pub noisy_ids: Vec<usize>,
    pub detection: Option<Detection>,
}

/// Noisy copies of the three splits: biased train and validation, uniform test.
pub fn noisy_splits(
    setup: &CorpusSetup,
    setting: &BiasSetting,
    target_class: usize,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset, Vec<usize>)> {
    let s = build_splits(&CorpusSetup { corpus_seed: seed, split_seed: seed, ..setup.clone() })?;
    let spec = NoiseSpec {
        count: setting.count,
        p_target: setting.p_target,
        p_other: setting.p_other,
        target_class,
        seed,
    };
    let (train, ids) = append_noise_columns(&s.train, &spec, NoiseMode::Biased, 1)?;
    let (test, _) = append_noise_columns(&s.test, &spec, NoiseMode::Uniform, 2)?;
    let (val, _) = append_noise_columns(&s.val, &spec, NoiseMode::Biased, 3)?;
    Ok((train, val, test, ids))
}

fn class_f1(model: &dyn Predictor, ds: &Dataset, class: usize) -> Result<f64> {
    let preds: Vec<Vec<f64>> = ds.inputs().map(|x| model.predict_proba(x)).collect();
    let labels: Vec<_> = ds.examples.iter().map(|e| e.labels).collect();
    Ok(class_confusion(&preds, &labels, class)?.scores().f1)
}

fn exposes(f: &Dnf, ids: &[usize], rule: DetectionRule) -> bool {
    f.literals().any(|l| ids.contains(&l.feature) && (rule == DetectionRule::Mention || !l.negated))
}

/// The surrogate's global explanation: the `n` largest aggregated weights of
/// a submodular pick over validation explanations.
fn surrogate_global(model: &EntropyLenModel, val: &Dataset, class: usize, n: usize, cfg: &BiasConfig, seed: u64) -> Result<Vec<(usize, f64)>> {
    let rows: Vec<&[f64]> = val
        .inputs()
        .filter(|x| model.predict_class(x, class) >= 0.5)
        .take(cfg.surrogate_explained)
        .collect();
    let explanations = rows
        .par_iter()
        .enumerate()
        .map(|(i, x)| surrogate_local(model, x, class, &cfg.surrogate, rng::derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let pick = submodular_pick(&explanations, val.n_features(), cfg.pick_budget)?;
    Ok(pick.top_features(n))
}

fn attempt(setting: &BiasSetting, cfg: &BiasConfig, seed: u64) -> Result<(f64, f64, Vec<usize>, Option<Detection>)> {
    let class = cfg.target_class;
    let (train_set, val, test, ids) = noisy_splits(&cfg.corpus, setting, class, seed)?;
    let model = train(&train_set, &TrainConfig { seed, ..cfg.train.clone() })?;
    let f1_val = class_f1(&model, &val, class)?;
    let f1_test = class_f1(&model, &test, class)?;
    if f1_val - f1_test < setting.f1_gap_threshold {
        return Ok((f1_val, f1_test, ids, None));
    }
    let logic = |strategy, aggregation| {
        let g = GlobalConfig { strategy, aggregation, k: cfg.k, objective: cfg.objective };
        global_explanation(&model, &model, &train_set, &val, class, &g)
    };
    let len = logic(Strategy::Len, Aggregation::Greedy)?;
    let lenp = logic(Strategy::Lenp, Aggregation::Powerset)?;
    let n = lenp.literals().map(|l| l.feature).collect::<std::collections::BTreeSet<_>>().len().max(1);
    let top = surrogate_global(&model, &val, class, n, cfg, seed)?;
    let vocab = &train_set.vocabulary;
    Ok((
        f1_val,
        f1_test,
        ids.clone(),
        Some(Detection {
            len: exposes(&len, &ids, cfg.rule),
            lenp: exposes(&lenp, &ids, cfg.rule),
            surrogate: top
                .iter()
                .any(|&(j, w)| ids.contains(&j) && (cfg.rule == DetectionRule::Mention || w > 0.0)),
            len_formula: len.render(vocab),
            lenp_formula: lenp.render(vocab),
            surrogate_features: top.iter().map(|&(j, _)| vocab.term(j).to_string()).collect(),
        }),
    ))
}

/// One trial: attempts with seeds derived from `seed` until the trained
/// model shows the required validation/test F1 gap on the target tag, then
/// the three global explanations of that tag are checked for noisy features.
pub fn run_bias_trial(setting: &BiasSetting, cfg: &BiasConfig, seed: u64) -> Result<DetectionRecord> {
    setting.validate()?;
    if cfg.retry_cap == 0 {
        return Err(Error::invalid("retry cap must be at least 1"));
    }
    let mut last = None;
    for a in 0..cfg.retry_cap {
        let s = rng::derive_seed(seed, a as u64);
        let (f1_val, f1_test, noisy_ids, detection) = attempt(setting, cfg, s)?;
        let biased = detection.is_some();
        let record = DetectionRecord { seed: s, attempts: a + 1, biased, f1_val, f1_test, noisy_ids, detection };
        if biased {
            return Ok(record);
        }
        last = Some(record);
    }
    Ok(last.expect("retry cap is positive"))
}

/// Detection rates of a batch of trials. Unbiased runs are excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    pub setting: BiasSetting,
    pub n_trials: usize,
    pub n_biased: usize,
    /// Percentages with 95% half-widths, in LEN, LEN^p, surrogate order.
    pub rates: Vec<(Provenance, MeanCi)>,
    pub records: Vec<DetectionRecord>,
}

impl BiasSummary {
    pub fn from_records(setting: BiasSetting, records: Vec<DetectionRecord>) -> Self {
        let detections: Vec<&Detection> = records.iter().filter_map(|r| r.detection.as_ref()).collect();
        let rates = [Provenance::Len, Provenance::Lenp, Provenance::Surrogate]
            .into_iter()
            .map(|p| {
                let v: Vec<f64> = detections.iter().map(|d| if d.get(p) { 100.0 } else { 0.0 }).collect();
                (p, MeanCi::of(&v))
            })
            .collect();
        Self { setting, n_trials: records.len(), n_biased: detections.len(), rates, records }
    }

    pub fn rate(&self, p: Provenance) -> Option<MeanCi> {
        self.rates.iter().find(|(q, _)| *q == p).map(|(_, r)| *r)
    }
}

impl fmt::Display for BiasSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "| Explanation strategy | {} detection rate (%) |", self.setting.name)?;
        writeln!(f, "|----------------------|------------------------|")?;
        for (p, r) in &self.rates {
            writeln!(f, "| {:<20} | {:>6.1} ± {:<5.1}         |", p.label(), r.mean, r.half_width)?;
        }
        write!(f, "biased runs: {}/{}", self.n_biased, self.n_trials)
    }
}

/// `n_trials` independent trials (run concurrently) with seeds derived from
/// `seed`.
pub fn run_bias_suite(setting: &BiasSetting, cfg: &BiasConfig, n_trials: usize, seed: u64) -> Result<BiasSummary> {
    setting.validate()?;
    let records = (0..n_trials)
        .into_par_iter()
        .map(|t| run_bias_trial(setting, cfg, rng::derive_seed(seed, 0xB1A5_0000 + t as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BiasSummary::from_records(setting.clone(), records))
}
