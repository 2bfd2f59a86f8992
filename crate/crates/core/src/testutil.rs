//! Hand-built models and datasets shared by unit tests.

use crate::data::{ConceptVector, Dataset, LabelSet, LabeledExample, Vocabulary};
use crate::neural::{ClassNet, Dense, EntropyLenModel};

/// One-class network computing `sigmoid(b + Σ_j w_j α̃_j x_j)`.
///
/// The gated layer holds `w` and `−w` in two ReLU units and the head takes
/// their difference, so every column's L1 norm is `2|w_j|`.
pub fn linear_len(w: &[f64], b: f64, tau: f64) -> EntropyLenModel {
    let d = w.len();
    let mut weights = w.to_vec();
    weights.extend(w.iter().map(|v| -v));
    let l0 = Dense::from_parts(2, d, weights, vec![b, -b]).unwrap();
    let head = Dense::from_parts(1, 2, vec![1.0, -1.0], vec![0.0]).unwrap();
    EntropyLenModel::from_classes(vec!["y".into()], tau, vec![ClassNet { layers: vec![l0, head] }]).unwrap()
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Single-class dataset over features named `x1..xd`.
pub fn dataset(rows: &[(Vec<f64>, bool)]) -> Dataset {
    let d = rows[0].0.len();
    let examples = rows
        .iter()
        .map(|(x, y)| LabeledExample {
            concepts: ConceptVector::new(x.clone()).unwrap(),
            labels: if *y { LabelSet::from_indices([0]) } else { LabelSet::default() },
            raw_text: None,
        })
        .collect();
    let vocab = Vocabulary::new((1..=d).map(|i| format!("x{i}")).collect()).unwrap();
    Dataset::new(examples, vocab, vec!["y".into()]).unwrap()
}

/// Bits of `i` as a length-`d` concept vector, feature 0 least significant.
pub fn bits(i: usize, d: usize) -> Vec<f64> {
    (0..d).map(|j| ((i >> j) & 1) as f64).collect()
}
