//! Local and global logic explanations.
//!
//! A local explanation is a conjunction over the relevant features of a
//! class. The plain extractor keeps every relevant feature; the refined one
//! flips each literal and keeps only those whose flip lowers the predicted
//! probability ("good" terms), discarding the rest ("bad" terms). Global
//! explanations disjoin frequent local ones, either greedily or by searching
//! every subset of the top-k candidates.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::logic::{Conjunction, Dnf, FrequencyTable, Literal, Objective};
use crate::neural::EntropyLenModel;
use crate::{binarize, flip, Error, Predictor, Result};

/// Subsets of at most this many clauses are searched by default.
pub const DEFAULT_POWERSET_CAP: usize = 10;
/// No configuration may search more than `2^20` subsets.
pub const HARD_POWERSET_CAP: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Len,
    #[default]
    Lenp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Greedy,
    #[default]
    Powerset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanationResult {
    pub good: Conjunction,
    pub bad: Vec<Literal>,
    pub source: Strategy,
    pub class: usize,
    /// Class probability of the explained model on the unmodified input.
    pub prediction: f64,
}

impl LocalExplanationResult {
    pub fn is_vacuous(&self) -> bool {
        self.good.is_vacuous()
    }
}

/// One literal per relevant feature of `class`, with the polarity `x`
/// currently has. An empty relevant set yields the vacuous conjunction.
pub fn len_local(model: &EntropyLenModel, x: &[f64], class: usize) -> Result<Conjunction> {
    check_input(model, x)?;
    let relevant = model.relevant_features(class)?;
    Conjunction::new(relevant.into_iter().map(|j| Literal::observed(x, j, model.theta)))
}

/// Refines [`len_local`] by flipping each literal on the binarized input and
/// asking the model whether the class probability drops.
pub fn lenp_local(model: &EntropyLenModel, x: &[f64], class: usize) -> Result<LocalExplanationResult> {
    lenp_local_with(model, model, x, class)
}

/// As [`lenp_local`], but the flip test queries `oracle` — the model whose
/// decision is being explained, e.g. a black box the network was distilled
/// from. Candidate literals still come from `model`'s relevance scores.
///
/// Comparisons use the binarized input so the partition depends only on the
/// truth values of the predicates, never on sub-threshold jitter.
pub fn lenp_local_with(
    model: &EntropyLenModel,
    oracle: &dyn Predictor,
    x: &[f64],
    class: usize,
) -> Result<LocalExplanationResult> {
    check_input(model, x)?;
    if oracle.n_features() != x.len() {
        return Err(Error::DimensionMismatch { expected: oracle.n_features(), actual: x.len() });
    }
    if class >= oracle.n_classes() {
        return Err(Error::invalid(format!("class {class} out of range for oracle")));
    }
    let candidate = len_local(model, x, class)?;
    let base = binarize(x);
    let org = oracle.predict_class(&base, class);
    let mut good = Vec::new();
    let mut bad = Vec::new();
    let mut perturbed = base.clone();
    for &lit in candidate.literals() {
        flip(&mut perturbed, lit.feature);
        let pert = oracle.predict_class(&perturbed, class);
        perturbed[lit.feature] = base[lit.feature];
        if org <= pert {
            bad.push(lit);
        } else {
            good.push(lit);
        }
    }
    Ok(LocalExplanationResult {
        good: Conjunction::new(good)?,
        bad,
        source: Strategy::Lenp,
        class,
        prediction: oracle.predict_class(x, class),
    })
}

/// Local explanation under either strategy, in the common result shape.
/// For the plain strategy every literal is reported as good.
pub fn local_explanation(
    model: &EntropyLenModel,
    oracle: &dyn Predictor,
    x: &[f64],
    class: usize,
    strategy: Strategy,
) -> Result<LocalExplanationResult> {
    match strategy {
        Strategy::Lenp => lenp_local_with(model, oracle, x, class),
        Strategy::Len => Ok(LocalExplanationResult {
            good: len_local(model, x, class)?,
            bad: Vec::new(),
            source: Strategy::Len,
            class,
            prediction: oracle.predict_class(x, class),
        }),
    }
}

fn check_input(model: &EntropyLenModel, x: &[f64]) -> Result<()> {
    if x.len() != model.n_features() {
        return Err(Error::DimensionMismatch { expected: model.n_features(), actual: x.len() });
    }
    Ok(())
}

/// Counts the local explanations of every example the oracle assigns to
/// `class` (probability ≥ 0.5). Vacuous explanations are not counted.
pub fn collect_frequencies(
    model: &EntropyLenModel,
    oracle: &dyn Predictor,
    ds: &Dataset,
    class: usize,
    strategy: Strategy,
) -> Result<FrequencyTable> {
    let clauses: Vec<Option<Conjunction>> = ds
        .examples
        .par_iter()
        .map(|e| {
            if oracle.predict_class(&e.concepts, class) < 0.5 {
                return Ok(None);
            }
            let r = local_explanation(model, oracle, &e.concepts, class, strategy)?;
            Ok((!r.is_vacuous()).then_some(r.good))
        })
        .collect::<Result<_>>()?;
    Ok(clauses.into_iter().flatten().collect())
}

/// The `k` most frequent local explanations, most frequent first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopK {
    pub clauses: Vec<Conjunction>,
}

/// Highest counts first; equal counts fall back to the canonical order of
/// the conjunctions.
pub fn topk(table: &FrequencyTable, k: usize) -> Result<TopK> {
    if k == 0 || k > HARD_POWERSET_CAP {
        return Err(Error::invalid(format!("k must be in 1..={HARD_POWERSET_CAP}, got {k}")));
    }
    let mut entries: Vec<(&Conjunction, usize)> = table.iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(TopK { clauses: entries.into_iter().take(k).map(|(c, _)| c.clone()).collect() })
}

/// Scans the candidates in order, keeping a clause only if it strictly
/// improves the validation score of the disjunction built so far.
pub fn aggregate_greedy(top: &TopK, val: &Dataset, class: usize, objective: Objective) -> Result<Dnf> {
    let table = CoverageTable::new(top, val, class, objective)?;
    let mut mask = 0u32;
    let mut best = table.score(mask);
    for i in 0..top.clauses.len() {
        let candidate = mask | (1 << i);
        let s = table.score(candidate);
        if s > best {
            best = s;
            mask = candidate;
        }
    }
    Ok(table.dnf(mask))
}

/// Exhaustive search over all `2^k` subsets of the candidates with the
/// default cap.
pub fn aggregate_powerset(top: &TopK, val: &Dataset, class: usize, objective: Objective) -> Result<Dnf> {
    aggregate_powerset_capped(top, val, class, objective, DEFAULT_POWERSET_CAP)
}

/// Returns the score-maximal disjunction. Ties prefer fewer clauses, then the
/// canonical order of the sorted clause lists. The empty disjunction wins
/// only when it is strictly best or when every subset scores the same.
pub fn aggregate_powerset_capped(
    top: &TopK,
    val: &Dataset,
    class: usize,
    objective: Objective,
    cap: usize,
) -> Result<Dnf> {
    let k = top.clauses.len();
    let cap = cap.min(HARD_POWERSET_CAP);
    if k > cap {
        return Err(Error::PowersetTooLarge { k, cap, evaluations: (1u128 << k) * val.len() as u128 });
    }
    let table = CoverageTable::new(top, val, class, objective)?;
    let empty = table.score(0);
    if k == 0 {
        return Ok(Dnf::default());
    }
    let scored = (1u32..(1u32 << k)).into_par_iter().map(|m| (m, table.score(m)));
    let (best_mask, best) = scored.reduce_with(|a, b| if table.better(b, a) == Ordering::Greater { b } else { a }).unwrap();
    let all_equal = best == empty && (1u32..(1u32 << k)).into_par_iter().all(|m| table.score(m) == empty);
    if empty > best || all_equal {
        return Ok(Dnf::default());
    }
    Ok(table.dnf(best_mask))
}

/// Per-clause coverage bitsets over the validation rows.
struct CoverageTable<'a> {
    clauses: &'a [Conjunction],
    coverage: Vec<Vec<u64>>,
    labels: Vec<u64>,
    n: usize,
    objective: Objective,
    /// Position of each clause in canonical order, for tie-breaking.
    rank: Vec<usize>,
}

impl<'a> CoverageTable<'a> {
    fn new(top: &'a TopK, val: &Dataset, class: usize, objective: Objective) -> Result<Self> {
        if class >= val.n_classes() {
            return Err(Error::invalid(format!("class {class} out of range")));
        }
        if top.clauses.len() > 31 {
            return Err(Error::invalid("too many clauses"));
        }
        let n = val.len();
        let words = n.div_ceil(64);
        let mut labels = vec![0u64; words];
        let mut coverage = vec![vec![0u64; words]; top.clauses.len()];
        for (i, e) in val.examples.iter().enumerate() {
            if e.labels.contains(class) {
                labels[i / 64] |= 1 << (i % 64);
            }
            for (c, cov) in top.clauses.iter().zip(coverage.iter_mut()) {
                if c.evaluate(&e.concepts, crate::THETA) {
                    cov[i / 64] |= 1 << (i % 64);
                }
            }
        }
        let mut order: Vec<usize> = (0..top.clauses.len()).collect();
        order.sort_by(|&a, &b| top.clauses[a].cmp(&top.clauses[b]));
        let mut rank = vec![0; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        Ok(Self { clauses: &top.clauses, coverage, labels, n, objective, rank })
    }

    fn score(&self, mask: u32) -> f64 {
        let (mut tp, mut fp) = (0u32, 0u32);
        let mut pos = 0u32;
        for w in 0..self.labels.len() {
            let mut covered = 0u64;
            let mut m = mask;
            while m != 0 {
                covered |= self.coverage[m.trailing_zeros() as usize][w];
                m &= m - 1;
            }
            tp += (covered & self.labels[w]).count_ones();
            fp += (covered & !self.labels[w]).count_ones();
            pos += self.labels[w].count_ones();
        }
        let fn_ = pos - tp;
        let tn = self.n as u32 - tp - fp - fn_;
        match self.objective {
            Objective::Accuracy => {
                if self.n == 0 {
                    0.0
                } else {
                    (tp + tn) as f64 / self.n as f64
                }
            }
            Objective::F1 => {
                let denom = 2 * tp + fp + fn_;
                if denom == 0 {
                    0.0
                } else {
                    2.0 * tp as f64 / denom as f64
                }
            }
        }
    }

    /// Total order on scored subsets: higher score, then fewer clauses, then
    /// lexicographically smaller canonical clause list.
    fn better(&self, a: (u32, f64), b: (u32, f64)) -> Ordering {
        a.1.total_cmp(&b.1)
            .then_with(|| b.0.count_ones().cmp(&a.0.count_ones()))
            .then_with(|| self.canonical(b.0).cmp(&self.canonical(a.0)))
    }

    fn canonical(&self, mask: u32) -> Vec<usize> {
        let mut ranks: Vec<usize> = (0..self.clauses.len()).filter(|i| mask & (1 << i) != 0).map(|i| self.rank[i]).collect();
        ranks.sort_unstable();
        ranks
    }

    fn dnf(&self, mask: u32) -> Dnf {
        Dnf::new((0..self.clauses.len()).filter(|i| mask & (1 << i) != 0).map(|i| self.clauses[i].clone()))
    }
}

/// Settings for building a class-level explanation from local ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalConfig {
    pub strategy: Strategy,
    pub aggregation: Aggregation,
    pub k: usize,
    pub objective: Objective,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self { strategy: Strategy::Lenp, aggregation: Aggregation::Powerset, k: 5, objective: Objective::Accuracy }
    }
}

/// Frequency collection on `train`, top-k selection, and aggregation scored
/// on `val`.
pub fn global_explanation(
    model: &EntropyLenModel,
    oracle: &dyn Predictor,
    train: &Dataset,
    val: &Dataset,
    class: usize,
    cfg: &GlobalConfig,
) -> Result<Dnf> {
    let table = collect_frequencies(model, oracle, train, class, cfg.strategy)?;
    let top = topk(&table, cfg.k)?;
    global_explanation_from(&top, val, class, cfg)
}

/// The aggregation step of [`global_explanation`] on given candidates.
pub fn global_explanation_from(top: &TopK, val: &Dataset, class: usize, cfg: &GlobalConfig) -> Result<Dnf> {
    match cfg.aggregation {
        Aggregation::Greedy => aggregate_greedy(top, val, class, cfg.objective),
        Aggregation::Powerset => aggregate_powerset(top, val, class, cfg.objective),
    }
}

mod report;
pub use report::{global_report, local_report, Candidate, GlobalReport, LocalReport};
