//! Labeled text ingestion and binary bag-of-words concept encoding.

mod io;
mod noise;
mod split;
pub mod synthetic;
mod text;

use std::collections::HashMap;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use io::{read_jsonl, write_jsonl, DatasetFile, RawDocument};
pub use noise::{append_noise_columns, inject_noise_features, NoiseMode, NoiseSpec};
pub use split::{split, Fractions};
pub use text::{build_vocabulary, encode, tokenize};

/// Ordered token list with a reverse index. Ids are contiguous and stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(terms: Vec<String>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("vocabulary must contain at least one term"));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (id, term) in terms.iter().enumerate() {
            if index.insert(term.clone(), id).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary term `{term}`")));
            }
        }
        Ok(Self { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Appends new terms; returns their ids.
    pub fn extend(&mut self, terms: impl IntoIterator<Item = String>) -> Result<Vec<usize>> {
        let mut ids = Vec::new();
        for term in terms {
            if self.index.contains_key(&term) {
                return Err(Error::invalid(format!("duplicate vocabulary term `{term}`")));
            }
            let id = self.terms.len();
            self.index.insert(term.clone(), id);
            self.terms.push(term);
            ids.push(id);
        }
        Ok(ids)
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(terms: Vec<String>) -> Result<Self> {
        Vocabulary::new(terms)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.terms
    }
}

/// Feature vector over a vocabulary, each entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptVector(Vec<f64>);

impl ConceptVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("concept value {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn push(&mut self, v: f64) {
        self.0.push(v);
    }

    pub(crate) fn set(&mut self, j: usize, v: f64) {
        self.0[j] = v;
    }
}

impl Deref for ConceptVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Label bit-set over at most 64 classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(u64);

impl LabelSet {
    pub const MAX_CLASSES: usize = 64;

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = 0u64;
        for i in indices {
            assert!(i < Self::MAX_CLASSES, "class index {i} exceeds label-set width");
            bits |= 1 << i;
        }
        Self(bits)
    }

    pub fn contains(self, class: usize) -> bool {
        class < Self::MAX_CLASSES && self.0 >> class & 1 == 1
    }

    pub fn insert(&mut self, class: usize) {
        self.0 |= 1 << class;
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..Self::MAX_CLASSES).filter(move |&i| self.0 >> i & 1 == 1)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn bits(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub concepts: ConceptVector,
    pub labels: LabelSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub vocabulary: Vocabulary,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>, vocabulary: Vocabulary, class_names: Vec<String>) -> Result<Self> {
        if class_names.is_empty() || class_names.len() > LabelSet::MAX_CLASSES {
            return Err(Error::invalid(format!(
                "number of classes must be in 1..={}, got {}",
                LabelSet::MAX_CLASSES,
                class_names.len()
            )));
        }
        let d = vocabulary.len();
        for ex in &examples {
            if ex.concepts.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: ex.concepts.len() });
            }
            if ex.labels.bits() >> class_names.len() != 0 {
                return Err(Error::invalid("label bit outside the class range"));
            }
        }
        Ok(Self { examples, vocabulary, class_names })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_index(&self, name: &str) -> Result<usize> {
        self.class_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownClass(name.to_string()))
    }

    /// New dataset sharing vocabulary and classes, holding the given rows.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            vocabulary: self.vocabulary.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same inputs, labels replaced.
    pub fn relabel(&self, labels: impl IntoIterator<Item = LabelSet>) -> Dataset {
        let mut out = self.clone();
        for (ex, l) in out.examples.iter_mut().zip(labels) {
            ex.labels = l;
        }
        out
    }

    pub fn inputs(&self) -> impl Iterator<Item = &[f64]> {
        self.examples.iter().map(|e| &*e.concepts)
    }

    pub fn label_column(&self, class: usize) -> Vec<bool> {
        self.examples.iter().map(|e| e.labels.contains(class)).collect()
    }

    pub fn prevalence(&self, class: usize) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.examples.iter().filter(|e| e.labels.contains(class)).count() as f64 / self.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_rejects_duplicates_and_empty() {
        assert!(Vocabulary::new(vec![]).is_err());
        assert!(Vocabulary::new(vec!["a".into(), "a".into()]).is_err());
        let v = Vocabulary::new(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(v.id("b"), Some(1));
        assert_eq!(v.term(0), "a");
    }

    #[test]
    fn vocabulary_json_is_a_string_array() {
        let v = Vocabulary::new(vec!["c#".into(), ".net".into()]).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["c#",".net"]"#);
        let back: Vocabulary = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<Vocabulary>(r#"["a","a"]"#).is_err());
    }

    #[test]
    fn concept_vector_range_checked() {
        assert!(ConceptVector::new(vec![0.0, 1.0, 0.3]).is_ok());
        assert!(ConceptVector::new(vec![1.2]).is_err());
        assert!(ConceptVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn label_set_bits() {
        let mut l = LabelSet::from_indices([0, 2]);
        assert!(l.contains(0) && !l.contains(1) && l.contains(2));
        l.insert(1);
        assert_eq!(l.indices().collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn dataset_checks_dimensions() {
        let vocab = Vocabulary::new(vec!["a".into()]).unwrap();
        let ex = LabeledExample {
            concepts: ConceptVector::zeros(2),
            labels: LabelSet::default(),
            raw_text: None,
        };
        assert!(Dataset::new(vec![ex], vocab.clone(), vec!["x".into()]).is_err());
        assert!(Dataset::new(vec![], vocab, vec![]).is_err());
    }
}
