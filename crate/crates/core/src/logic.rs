//! Propositional formulas over concept predicates.
//!
//! A literal reads feature `j` through the predicate `x_j > θ`, possibly
//! negated. Conjunctions are kept canonical (sorted by feature, then
//! polarity, duplicates merged) so that structurally equal explanations
//! compare and hash equal, which frequency counting relies on.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    #[serde(rename = "f")]
    pub feature: usize,
    #[serde(rename = "neg")]
    pub negated: bool,
}

impl Literal {
    pub fn pos(feature: usize) -> Self {
        Self { feature, negated: false }
    }

    pub fn neg(feature: usize) -> Self {
        Self { feature, negated: true }
    }

    /// Literal matching the current truth value of feature `j` in `x`.
    pub fn observed(x: &[f64], j: usize, theta: f64) -> Self {
        Self { feature: j, negated: x[j] <= theta }
    }

    pub fn eval(self, x: &[f64], theta: f64) -> bool {
        (x[self.feature] > theta) != self.negated
    }
}

/// Conjunction of literals in canonical form. The empty conjunction is
/// vacuously true.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Literal>", into = "Vec<Literal>")]
pub struct Conjunction {
    literals: Vec<Literal>,
}

/// Sorts by `(feature, polarity)` and merges duplicates; rejects `x_j ∧ ¬x_j`.
pub fn canonicalize(literals: &[Literal]) -> Result<Conjunction> {
    let mut lits = literals.to_vec();
    lits.sort();
    lits.dedup();
    if let Some(w) = lits.windows(2).find(|w| w[0].feature == w[1].feature) {
        return Err(Error::Contradiction(w[0].feature));
    }
    Ok(Conjunction { literals: lits })
}

/// Evaluates a raw literal list without canonicalizing it.
pub fn evaluate_literals(literals: &[Literal], x: &[f64], theta: f64) -> bool {
    literals.iter().all(|l| l.eval(x, theta))
}

impl Conjunction {
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Result<Self> {
        canonicalize(&literals.into_iter().collect::<Vec<_>>())
    }

    pub fn vacuous() -> Self {
        Self::default()
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// True for the empty conjunction, which holds on every input.
    pub fn is_vacuous(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn features(&self) -> impl Iterator<Item = usize> + '_ {
        self.literals.iter().map(|l| l.feature)
    }

    pub fn evaluate(&self, x: &[f64], theta: f64) -> bool {
        evaluate_literals(&self.literals, x, theta)
    }

    pub fn render(&self, vocab: &Vocabulary) -> String {
        if self.literals.is_empty() {
            return "⊤".to_string();
        }
        let mut out = String::new();
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                out.push_str(" ∧ ");
            }
            if l.negated {
                out.push('¬');
            }
            out.push_str(vocab.term(l.feature));
        }
        out
    }
}

impl TryFrom<Vec<Literal>> for Conjunction {
    type Error = Error;

    fn try_from(v: Vec<Literal>) -> Result<Self> {
        canonicalize(&v)
    }
}

impl From<Conjunction> for Vec<Literal> {
    fn from(c: Conjunction) -> Self {
        c.literals
    }
}

/// Disjunction of canonical, distinct conjunctions; clause order is kept.
/// The empty disjunction is false.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dnf {
    clauses: Vec<Conjunction>,
}

impl Dnf {
    pub fn new(clauses: impl IntoIterator<Item = Conjunction>) -> Self {
        let mut out = Dnf::default();
        for c in clauses {
            out.push(c);
        }
        out
    }

    /// Appends unless an equal clause is already present.
    pub fn push(&mut self, clause: Conjunction) {
        if !self.clauses.contains(&clause) {
            self.clauses.push(clause);
        }
    }

    pub fn clauses(&self) -> &[Conjunction] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn evaluate(&self, x: &[f64], theta: f64) -> bool {
        self.clauses.iter().any(|c| c.evaluate(x, theta))
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.clauses.iter().flat_map(|c| c.literals.iter().copied())
    }

    pub fn render(&self, vocab: &Vocabulary) -> String {
        match self.clauses.as_slice() {
            [] => "⊥".to_string(),
            [only] => only.render(vocab),
            many => {
                let mut out = String::new();
                for (i, c) in many.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" ∨ ");
                    }
                    let _ = write!(out, "({})", c.render(vocab));
                }
                out
            }
        }
    }
}

/// Either shape of formula, for operations defined on both.
pub trait Formula {
    fn evaluate(&self, x: &[f64], theta: f64) -> bool;
}

impl Formula for Conjunction {
    fn evaluate(&self, x: &[f64], theta: f64) -> bool {
        Conjunction::evaluate(self, x, theta)
    }
}

impl Formula for Dnf {
    fn evaluate(&self, x: &[f64], theta: f64) -> bool {
        Dnf::evaluate(self, x, theta)
    }
}

/// How a formula is scored against one class's labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[default]
    Accuracy,
    F1,
}

impl Objective {
    /// Score from predicted/true pairs.
    pub fn score(self, pairs: impl IntoIterator<Item = (bool, bool)>) -> f64 {
        let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
        for (pred, truth) in pairs {
            match (pred, truth) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        match self {
            Objective::Accuracy => {
                let n = tp + fp + fn_ + tn;
                if n == 0 {
                    0.0
                } else {
                    (tp + tn) as f64 / n as f64
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
}

/// Fraction of rows where the formula agrees with the class label.
pub fn formula_accuracy(f: &impl Formula, ds: &Dataset, class: usize, theta: f64) -> f64 {
    formula_score(f, ds, class, theta, Objective::Accuracy)
}

pub fn formula_score(f: &impl Formula, ds: &Dataset, class: usize, theta: f64, objective: Objective) -> f64 {
    objective.score(ds.examples.iter().map(|e| (f.evaluate(&e.concepts, theta), e.labels.contains(class))))
}

/// `μ`: occurrence counts of canonical conjunctions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    counts: BTreeMap<Conjunction, usize>,
}

impl FrequencyTable {
    pub fn add(&mut self, c: Conjunction) {
        *self.counts.entry(c).or_default() += 1;
    }

    pub fn count(&self, c: &Conjunction) -> usize {
        self.counts.get(c).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Conjunction, usize)> {
        self.counts.iter().map(|(c, &n)| (c, n))
    }
}

impl FromIterator<Conjunction> for FrequencyTable {
    fn from_iter<I: IntoIterator<Item = Conjunction>>(iter: I) -> Self {
        let mut t = FrequencyTable::default();
        for c in iter {
            t.add(c);
        }
        t
    }
}

impl FromIterator<(Conjunction, usize)> for FrequencyTable {
    fn from_iter<I: IntoIterator<Item = (Conjunction, usize)>>(iter: I) -> Self {
        let mut t = FrequencyTable::default();
        for (c, n) in iter {
            if n > 0 {
                *t.counts.entry(c).or_default() += n;
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ConceptVector, LabelSet, LabeledExample};
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn vocab(terms: &[&str]) -> Vocabulary {
        Vocabulary::new(terms.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn not_csharp_and_dotnet() {
        // features: 0 = c#, 1 = .net
        let c = Conjunction::new([Literal::neg(0), Literal::pos(1)]).unwrap();
        assert!(c.evaluate(&[0.0, 1.0], 0.5));
        assert!(!c.evaluate(&[1.0, 1.0], 0.5));
        assert_eq!(c.render(&vocab(&["c#", ".net"])), "¬c# ∧ .net");
    }

    #[test]
    fn empty_formulas() {
        assert!(Conjunction::vacuous().evaluate(&[0.0, 1.0], 0.5));
        assert!(Conjunction::vacuous().is_vacuous());
        assert!(!Dnf::default().evaluate(&[0.0, 1.0], 0.5));
    }

    #[test]
    fn canonical_order_dedup_and_contradiction() {
        let (a, b) = (0, 1);
        let c = canonicalize(&[Literal::neg(b), Literal::pos(a)]).unwrap();
        assert_eq!(c.literals(), &[Literal::pos(a), Literal::neg(b)]);
        let c = canonicalize(&[Literal::pos(a), Literal::pos(a)]).unwrap();
        assert_eq!(c.literals(), &[Literal::pos(a)]);
        assert!(matches!(canonicalize(&[Literal::pos(a), Literal::neg(a)]), Err(Error::Contradiction(0))));
    }

    #[test]
    fn rendering() {
        let v = vocab(&["a", "b", "c", ".NET"]);
        assert_eq!(Conjunction::new([Literal::pos(3)]).unwrap().render(&v), ".NET");
        let dnf = Dnf::new([
            Conjunction::new([Literal::pos(0), Literal::pos(1)]).unwrap(),
            Conjunction::new([Literal::neg(2)]).unwrap(),
        ]);
        assert_eq!(dnf.render(&v), "(a ∧ b) ∨ (¬c)");
        assert_eq!(Dnf::default().render(&v), "⊥");
    }

    #[test]
    fn json_shape() {
        let dnf = Dnf::new([Conjunction::new([Literal::neg(2), Literal::pos(0)]).unwrap()]);
        let s = serde_json::to_string(&dnf).unwrap();
        assert_eq!(s, r#"{"clauses":[[{"f":0,"neg":false},{"f":2,"neg":true}]]}"#);
        assert_eq!(serde_json::from_str::<Dnf>(&s).unwrap(), dnf);
        assert!(serde_json::from_str::<Conjunction>(r#"[{"f":1,"neg":false},{"f":1,"neg":true}]"#).is_err());
    }

    fn bits(i: usize, d: usize) -> Vec<f64> {
        (0..d).map(|j| ((i >> j) & 1) as f64).collect()
    }

    #[test]
    fn five_literal_formula_matches_truth_table() {
        let lits = [Literal::pos(0), Literal::neg(1), Literal::pos(2), Literal::neg(3), Literal::pos(4)];
        let c = Conjunction::new(lits).unwrap();
        for i in 0..32 {
            let x = bits(i, 5);
            let expected = x[0] == 1.0 && x[1] == 0.0 && x[2] == 1.0 && x[3] == 0.0 && x[4] == 1.0;
            assert_eq!(c.evaluate(&x, 0.5), expected);
        }
    }

    fn dataset(rows: Vec<(Vec<f64>, bool)>) -> Dataset {
        let d = rows[0].0.len();
        let examples = rows
            .into_iter()
            .map(|(x, y)| LabeledExample {
                concepts: ConceptVector::new(x).unwrap(),
                labels: if y { LabelSet::from_indices([0]) } else { LabelSet::default() },
                raw_text: None,
            })
            .collect();
        Dataset::new(examples, vocab(&["x1", "x2", "x3"][..d]), vec!["y".into()]).unwrap()
    }

    #[test]
    fn true_formula_scores_base_rate() {
        let rows = (0..10).map(|i| (vec![0.0], i < 3)).collect();
        let ds = dataset(rows);
        assert!((formula_accuracy(&Conjunction::vacuous(), &ds, 0, 0.5) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn single_literal_on_conjunction_task() {
        // the four equiprobable cases of (x1, x2) under y = x1 ∧ x2
        let rows = (0..4).map(|i| (bits(i, 2), i == 3)).collect();
        let ds = dataset(rows);
        let x1 = Conjunction::new([Literal::pos(0)]).unwrap();
        assert_eq!(formula_accuracy(&x1, &ds, 0, 0.5), 0.75);
        let rule = Conjunction::new([Literal::pos(0), Literal::pos(1)]).unwrap();
        assert_eq!(formula_accuracy(&rule, &ds, 0, 0.5), 1.0);
    }

    #[test]
    fn f1_objective() {
        assert_eq!(Objective::F1.score([(true, true), (true, false), (false, true)]), 0.5);
        assert_eq!(Objective::F1.score([(false, false)]), 0.0);
    }

    #[test]
    fn frequency_table_counts() {
        let a = Conjunction::new([Literal::pos(0)]).unwrap();
        let b = Conjunction::new([Literal::pos(1), Literal::neg(0)]).unwrap();
        let t: FrequencyTable = [a.clone(), b.clone(), a.clone()].into_iter().collect();
        assert_eq!((t.count(&a), t.count(&b), t.total()), (2, 1, 3));
    }

    /// Random literal list over `d` features; may contain duplicates.
    fn random_literals(r: &mut rng::Rng, d: usize) -> Vec<Literal> {
        let n = r.random_range(0..=d);
        let mut lits: Vec<Literal> = Vec::new();
        for _ in 0..n {
            let f = r.random_range(0..d);
            let l = lits.iter().find(|l| l.feature == f).copied().unwrap_or(Literal { feature: f, negated: r.random() });
            lits.push(l);
        }
        lits
    }

    #[test]
    fn canonicalization_preserves_semantics_exhaustively() {
        let mut r = rng::stream(17, 0);
        for d in 1..=10 {
            for _ in 0..20 {
                let raw = random_literals(&mut r, d);
                let canon = canonicalize(&raw).unwrap();
                for i in 0..(1usize << d) {
                    let x = bits(i, d);
                    assert_eq!(canon.evaluate(&x, 0.5), evaluate_literals(&raw, &x, 0.5));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn dnf_accuracy_ignores_clause_order(seed in 0u64..300) {
            let mut r = rng::stream(seed, 1);
            let rows: Vec<(Vec<f64>, bool)> = (0..40).map(|_| ((0..3).map(|_| r.random_range(0..2) as f64).collect(), r.random())).collect();
            let ds = dataset(rows);
            let clauses: Vec<Conjunction> = (0..4).map(|_| canonicalize(&random_literals(&mut r, 3)).unwrap()).collect();
            let forward = Dnf::new(clauses.clone());
            let backward = Dnf::new(clauses.iter().rev().cloned());
            prop_assert_eq!(formula_accuracy(&forward, &ds, 0, 0.5), formula_accuracy(&backward, &ds, 0, 0.5));
        }

        #[test]
        fn adding_a_clause_never_loses_true_positives(seed in 0u64..300) {
            let mut r = rng::stream(seed, 2);
            let rows: Vec<(Vec<f64>, bool)> = (0..40).map(|_| ((0..3).map(|_| r.random_range(0..2) as f64).collect(), r.random())).collect();
            let ds = dataset(rows);
            let mut dnf = Dnf::default();
            let tp = |f: &Dnf| ds.examples.iter().filter(|e| e.labels.contains(0) && f.evaluate(&e.concepts, 0.5)).count();
            for _ in 0..4 {
                let before = tp(&dnf);
                dnf.push(canonicalize(&random_literals(&mut r, 3)).unwrap());
                prop_assert!(tp(&dnf) >= before);
            }
        }
    }
}
