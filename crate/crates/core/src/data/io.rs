use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_vocabulary, encode, tokenize, ConceptVector, Dataset, LabelSet, LabeledExample, Vocabulary};
use crate::{Error, Result};

/// One line of a JSON-lines dataset: `{"text": "...", "labels": ["c#", "java"]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub text: String,
    #[serde(default)]
    pub labels: Vec<String>,
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<RawDocument>> {
    let reader = BufReader::new(File::open(path)?);
    let mut docs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str(&line)
            .map_err(|e| Error::invalid(format!("line {}: {e}", lineno + 1)))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_jsonl(path: impl AsRef<Path>, docs: &[RawDocument]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

impl Dataset {
    /// Tokenizes, builds the vocabulary and encodes. Class names are the
    /// sorted set of labels unless given explicitly.
    pub fn from_documents(
        docs: &[RawDocument],
        max_features: usize,
        min_doc_freq: usize,
        class_names: Option<Vec<String>>,
    ) -> Result<Dataset> {
        let tokens: Vec<Vec<String>> = docs.iter().map(|d| tokenize(&d.text)).collect();
        let vocabulary = build_vocabulary(&tokens, max_features, min_doc_freq)?;
        let class_names = class_names.unwrap_or_else(|| {
            let set: BTreeSet<&String> = docs.iter().flat_map(|d| &d.labels).collect();
            set.into_iter().cloned().collect()
        });
        Self::encode_documents(docs, &tokens, vocabulary, class_names)
    }

    /// Encodes against an existing vocabulary and class list.
    pub fn with_vocabulary(docs: &[RawDocument], vocabulary: Vocabulary, class_names: Vec<String>) -> Result<Dataset> {
        let tokens: Vec<Vec<String>> = docs.iter().map(|d| tokenize(&d.text)).collect();
        Self::encode_documents(docs, &tokens, vocabulary, class_names)
    }

    fn encode_documents(
        docs: &[RawDocument],
        tokens: &[Vec<String>],
        vocabulary: Vocabulary,
        class_names: Vec<String>,
    ) -> Result<Dataset> {
        let mut examples = Vec::with_capacity(docs.len());
        for (doc, toks) in docs.iter().zip(tokens) {
            let mut labels = LabelSet::default();
            for l in &doc.labels {
                // labels outside the chosen class list are dropped
                if let Some(i) = class_names.iter().position(|c| c == l) {
                    labels.insert(i);
                }
            }
            examples.push(LabeledExample {
                concepts: encode(toks, &vocabulary),
                labels,
                raw_text: Some(doc.text.clone()),
            });
        }
        Dataset::new(examples, vocabulary, class_names)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SparseExample {
    /// Nonzero `(feature, value)` pairs.
    x: Vec<(usize, f64)>,
    labels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

/// Encoded dataset on disk, sparse rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    class_names: Vec<String>,
    vocabulary: Vocabulary,
    examples: Vec<SparseExample>,
}

impl From<&Dataset> for DatasetFile {
    fn from(ds: &Dataset) -> Self {
        DatasetFile {
            class_names: ds.class_names.clone(),
            vocabulary: ds.vocabulary.clone(),
            examples: ds
                .examples
                .iter()
                .map(|e| SparseExample {
                    x: e.concepts.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (j, v)).collect(),
                    labels: e.labels.indices().collect(),
                    text: e.raw_text.clone(),
                })
                .collect(),
        }
    }
}

impl DatasetFile {
    pub fn into_dataset(self) -> Result<Dataset> {
        let d = self.vocabulary.len();
        let examples = self
            .examples
            .into_iter()
            .map(|e| {
                let mut values = vec![0.0; d];
                for (j, v) in e.x {
                    if j >= d {
                        return Err(Error::DimensionMismatch { expected: d, actual: j + 1 });
                    }
                    values[j] = v;
                }
                if let Some(&bad) = e.labels.iter().find(|&&l| l >= self.class_names.len()) {
                    return Err(Error::invalid(format!("label index {bad} out of range")));
                }
                Ok(LabeledExample {
                    concepts: ConceptVector::new(values)?,
                    labels: LabelSet::from_indices(e.labels),
                    raw_text: e.text,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(examples, self.vocabulary, self.class_names)
    }

    pub fn save(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(w, &DatasetFile::from(ds))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let file: DatasetFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        file.into_dataset()
    }
}
