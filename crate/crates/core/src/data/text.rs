use std::collections::{HashMap, HashSet};

use super::{ConceptVector, Vocabulary};
use crate::{Error, Result};

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '#' | '+' | '.')
}

/// Lowercases and splits on anything that is not alphanumeric, `#`, `+` or `.`.
///
/// Trailing dots are sentence punctuation and get stripped; a leading dot
/// survives when followed by an alphanumeric (".net"). Tokens made only of
/// punctuation are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !is_token_char(c))
        .filter_map(|raw| {
            let t = raw.trim_end_matches('.');
            let t = match t.strip_prefix('.') {
                Some(rest) if rest.starts_with(|c: char| c.is_alphanumeric()) => t,
                Some(_) => t.trim_start_matches('.'),
                None => t,
            };
            t.chars().any(char::is_alphanumeric).then(|| t.to_string())
        })
        .collect()
}

/// The `max_features` most document-frequent tokens with doc-frequency at
/// least `min_doc_freq`. Ids follow rank: frequency descending, then
/// lexicographic.
pub fn build_vocabulary<S: AsRef<str>>(docs: &[Vec<S>], max_features: usize, min_doc_freq: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if max_features == 0 {
        return Err(Error::invalid("max_features must be at least 1"));
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.iter().map(AsRef::as_ref).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = df.into_iter().filter(|&(_, n)| n >= min_doc_freq.max(1)).collect();
    if ranked.is_empty() {
        return Err(Error::EmptyVocabulary(min_doc_freq));
    }
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_features);
    Vocabulary::new(ranked.into_iter().map(|(t, _)| t.to_string()).collect())
}

/// Presence encoding; out-of-vocabulary tokens are ignored.
pub fn encode<S: AsRef<str>>(doc: &[S], vocab: &Vocabulary) -> ConceptVector {
    let mut x = ConceptVector::zeros(vocab.len());
    for t in doc {
        if let Some(j) = vocab.id(t.as_ref()) {
            x.set(j, 1.0);
        }
    }
    x
}
