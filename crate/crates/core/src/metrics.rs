//! Explanation-quality metrics (normalized AUC-MoRF, max-sensitivity) and
//! multi-label classification scores.

use std::collections::HashSet;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::LabelSet;
use crate::logic::Conjunction;
use crate::rng;
use crate::surrogate::WeightExplanation;
use crate::{flip, Error, Predictor, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Len,
    Lenp,
    Surrogate,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Len => "len",
            Provenance::Lenp => "lenp",
            Provenance::Surrogate => "surrogate",
        }
    }

    /// Display name for tables and plots.
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Len => "LEN",
            Provenance::Lenp => "LEN^p",
            Provenance::Surrogate => "LIME",
        }
    }
}

/// Feature ids in descending relevance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceRanking {
    pub ids: Vec<usize>,
    pub provenance: Provenance,
}

/// Sorts ids by descending score, ties by ascending id.
fn by_score(ids: &mut [usize], score: &[f64]) {
    ids.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
}

/// Ranking for a logic explanation: the formula's features by descending
/// `alpha_tilde`, then every other feature by descending `alpha_tilde`, then
/// the `demoted` features (terms the explanation discarded), truncated to `m`.
pub fn logic_ranking(
    formula: &Conjunction,
    demoted: &[usize],
    alpha_tilde: &[f64],
    m: usize,
    provenance: Provenance,
) -> Result<RelevanceRanking> {
    let d = alpha_tilde.len();
    if m == 0 || m > d {
        return Err(Error::invalid(format!("ranking length must be in 1..={d}, got {m}")));
    }
    if formula.features().chain(demoted.iter().copied()).any(|j| j >= d) {
        return Err(Error::invalid("explanation feature beyond alpha length"));
    }
    let mut head: Vec<usize> = formula.features().collect();
    by_score(&mut head, alpha_tilde);
    let mut tail: Vec<usize> = demoted.iter().copied().filter(|j| !head.contains(j)).collect();
    by_score(&mut tail, alpha_tilde);
    tail.dedup();
    let placed: HashSet<usize> = head.iter().chain(&tail).copied().collect();
    let mut middle: Vec<usize> = (0..d).filter(|j| !placed.contains(j)).collect();
    by_score(&mut middle, alpha_tilde);
    let mut ids = head;
    ids.extend(middle);
    ids.extend(tail);
    ids.truncate(m);
    Ok(RelevanceRanking { ids, provenance })
}

/// Ranking for a weight explanation: descending `|weight|`, then the
/// remaining features in id order, truncated to `m`.
pub fn weight_ranking(e: &WeightExplanation, d: usize, m: usize) -> Result<RelevanceRanking> {
    if m == 0 || m > d {
        return Err(Error::invalid(format!("ranking length must be in 1..={d}, got {m}")));
    }
    let mut weighted: Vec<(usize, f64)> = e.weights.clone();
    if weighted.iter().any(|&(j, _)| j >= d) {
        return Err(Error::invalid("weight feature beyond d"));
    }
    weighted.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    let mut ids: Vec<usize> = weighted.iter().map(|w| w.0).collect();
    ids.dedup();
    let placed: HashSet<usize> = ids.iter().copied().collect();
    ids.extend((0..d).filter(|j| !placed.contains(j)));
    ids.truncate(m);
    Ok(RelevanceRanking { ids, provenance: Provenance::Surrogate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorfCurve {
    /// `f(y^(0)) … f(y^(m))`
    pub values: Vec<f64>,
    pub auc_normalized: f64,
}

/// Class probability after flipping the ranked features one at a time,
/// most relevant first.
pub fn morf_curve(model: &dyn Predictor, x: &[f64], class: usize, ranking: &RelevanceRanking) -> Result<MorfCurve> {
    if ranking.ids.is_empty() {
        return Err(Error::invalid("empty ranking"));
    }
    let mut seen = HashSet::new();
    for &j in &ranking.ids {
        if j >= x.len() {
            return Err(Error::invalid(format!("ranked feature {j} out of range")));
        }
        if !seen.insert(j) {
            return Err(Error::invalid(format!("feature {j} ranked twice")));
        }
    }
    let mut y = x.to_vec();
    let mut values = Vec::with_capacity(ranking.ids.len() + 1);
    values.push(model.predict_class(&y, class));
    for &j in &ranking.ids {
        flip(&mut y, j);
        values.push(model.predict_class(&y, class));
    }
    let auc_normalized = auc_morf(&values)?;
    Ok(MorfCurve { values, auc_normalized })
}

/// Trapezoidal area over steps `1..=m`, divided by `m − 1`; the unperturbed
/// value does not enter. With a single step the area is `f(y^(1))`.
pub fn auc_morf(values: &[f64]) -> Result<f64> {
    let m = values.len().checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| Error::invalid("curve needs at least two points"))?;
    if m == 1 {
        return Ok(values[1]);
    }
    let area: f64 = (2..=m).map(|k| (values[k - 1] + values[k]) / 2.0).sum();
    Ok(area / (m - 1) as f64)
}

/// `+1` / `−1` for positive / negated literals, 0 elsewhere.
pub fn embed_conjunction(c: &Conjunction, d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    for l in c.literals() {
        v[l.feature] = if l.negated { -1.0 } else { 1.0 };
    }
    v
}

pub fn embed_weights(e: &WeightExplanation, d: usize) -> Vec<f64> {
    e.dense(d)
}

/// Largest Euclidean change of the explanation embedding over
/// `n_perturbations` points drawn uniformly from the ∞-ball of `radius`
/// around `x`, clipped to the unit cube. The draws form one seeded sequence,
/// so a larger count extends a smaller one.
pub fn max_sensitivity(
    explain: &(dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync),
    x: &[f64],
    radius: f64,
    n_perturbations: usize,
    seed: u64,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::invalid("radius must be positive"));
    }
    let reference = explain(x)?;
    let mut r = rng::stream(seed, 0x5E5);
    let mut worst = 0.0f64;
    let mut y = vec![0.0; x.len()];
    for _ in 0..n_perturbations {
        for (yj, &xj) in y.iter_mut().zip(x) {
            *yj = (xj + radius * r.random_range(-1.0..=1.0)).clamp(0.0, 1.0);
        }
        let e = explain(&y)?;
        if e.len() != reference.len() {
            return Err(Error::DimensionMismatch { expected: reference.len(), actual: e.len() });
        }
        let dist = e.iter().zip(&reference).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst = worst.max(dist);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub f1: f64,
    pub jaccard: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    /// Undefined ratios are reported as 0.
    pub fn scores(self) -> Scores {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Scores {
            f1: ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_),
            jaccard: ratio(self.tp, self.tp + self.fp + self.fn_),
            precision: ratio(self.tp, self.tp + self.fp),
            recall: ratio(self.tp, self.tp + self.fn_),
        }
    }

    fn add(&mut self, pred: bool, truth: bool) {
        match (pred, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

fn check_lengths(predictions: &[Vec<f64>], labels: &[LabelSet]) -> Result<()> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), actual: predictions.len() });
    }
    Ok(())
}

/// Confusion counts of one class at threshold 0.5.
pub fn class_confusion(predictions: &[Vec<f64>], labels: &[LabelSet], class: usize) -> Result<Confusion> {
    check_lengths(predictions, labels)?;
    let mut c = Confusion::default();
    for (p, l) in predictions.iter().zip(labels) {
        c.add(p[class] >= 0.5, l.contains(class));
    }
    Ok(c)
}

/// Micro-averaged scores over all classes at threshold 0.5.
pub fn multilabel_scores(predictions: &[Vec<f64>], labels: &[LabelSet]) -> Result<Scores> {
    check_lengths(predictions, labels)?;
    let mut c = Confusion::default();
    for (p, l) in predictions.iter().zip(labels) {
        for (class, &v) in p.iter().enumerate() {
            c.add(v >= 0.5, l.contains(class));
        }
    }
    Ok(c.scores())
}

/// Mean with a normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, half_width: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let half_width = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        };
        Self { mean, half_width, n }
    }
}

impl std::fmt::Display for MeanCi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.half_width)
    }
}
