//! Self-contained, serializable explanation records for people and files.

use serde::{Deserialize, Serialize};

use super::{collect_frequencies, global_explanation_from, local_explanation, topk, GlobalConfig, Strategy};
use crate::data::{Dataset, Vocabulary};
use crate::logic::{formula_score, Conjunction, Dnf, Literal, Objective};
use crate::neural::EntropyLenModel;
use crate::{Error, Predictor, Result};

fn render_literal(l: Literal, vocab: &Vocabulary) -> String {
    format!("{}{}", if l.negated { "¬" } else { "" }, vocab.term(l.feature))
}

/// One explained document: what was predicted, why, and which candidate
/// terms the refinement threw away.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalReport {
    pub row: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    pub predicted_tags: Vec<String>,
    pub class: String,
    pub strategy: Strategy,
    pub probability: f64,
    /// Single-clause formula in the common serialization.
    pub formula: Dnf,
    pub explanation: String,
    pub good_terms: Vec<String>,
    pub bad_terms: Vec<String>,
    /// One `"(¬t is a bad term, discarded)"` note per bad term.
    pub annotations: Vec<String>,
}

/// Explains row `row` of `ds` for `class`. `oracle` is the model whose
/// decisions are explained (the network itself, or a black box it mimics).
pub fn local_report(
    model: &EntropyLenModel,
    oracle: &dyn Predictor,
    ds: &Dataset,
    row: usize,
    class: usize,
    strategy: Strategy,
) -> Result<LocalReport> {
    let ex = ds
        .examples
        .get(row)
        .ok_or_else(|| Error::invalid(format!("row {row} out of range (dataset has {} rows)", ds.len())))?;
    let class_name = ds.class_names.get(class).ok_or_else(|| Error::UnknownClass(class.to_string()))?.clone();
    let r = local_explanation(model, oracle, &ex.concepts, class, strategy)?;
    let probs = oracle.predict_proba(&ex.concepts);
    let vocab = &ds.vocabulary;
    let bad_terms: Vec<String> = r.bad.iter().map(|&l| render_literal(l, vocab)).collect();
    Ok(LocalReport {
        row,
        question: ex.raw_text.clone(),
        predicted_tags: probs
            .iter()
            .zip(&ds.class_names)
            .filter(|(p, _)| **p >= 0.5)
            .map(|(_, n)| n.clone())
            .collect(),
        class: class_name,
        strategy,
        probability: r.prediction,
        formula: Dnf::new(vec![r.good.clone()]),
        explanation: r.good.render(vocab),
        good_terms: r.good.literals().iter().map(|&l| render_literal(l, vocab)).collect(),
        annotations: bad_terms.iter().map(|t| format!("({t} is a bad term, discarded)")).collect(),
        bad_terms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub clause: Conjunction,
    pub rendered: String,
    pub count: usize,
}

/// A class-level explanation with its candidates and scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalReport {
    pub class: String,
    pub config: GlobalConfig,
    /// The top-k local explanations, most frequent first.
    pub candidates: Vec<Candidate>,
    pub formula: Dnf,
    pub explanation: String,
    /// Objective value on the validation split.
    pub val_score: f64,
    /// Accuracy against the test labels, when a test split is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_accuracy: Option<f64>,
}

pub fn global_report(
    model: &EntropyLenModel,
    oracle: &dyn Predictor,
    train: &Dataset,
    val: &Dataset,
    test: Option<&Dataset>,
    class: usize,
    cfg: &GlobalConfig,
) -> Result<GlobalReport> {
    let class_name = train.class_names.get(class).ok_or_else(|| Error::UnknownClass(class.to_string()))?.clone();
    let table = collect_frequencies(model, oracle, train, class, cfg.strategy)?;
    let top = topk(&table, cfg.k)?;
    let formula = global_explanation_from(&top, val, class, cfg)?;
    let vocab = &train.vocabulary;
    Ok(GlobalReport {
        class: class_name,
        config: *cfg,
        candidates: top
            .clauses
            .iter()
            .map(|c| Candidate { clause: c.clone(), rendered: c.render(vocab), count: table.count(c) })
            .collect(),
        explanation: formula.render(vocab),
        val_score: formula_score(&formula, val, class, model.theta, cfg.objective),
        test_accuracy: test.map(|t| formula_score(&formula, t, class, model.theta, Objective::Accuracy)),
        formula,
    })
}
