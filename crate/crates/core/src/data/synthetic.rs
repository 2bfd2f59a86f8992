//! Generated datasets: a tag-classification corpus shaped like programming
//! Q&A posts, and small boolean tasks with a known generating rule.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ConceptVector, Dataset, LabelSet, LabeledExample, RawDocument, Vocabulary};
use crate::{rng, Result};

struct TagLexicon {
    tag: &'static str,
    surface: &'static str,
    cues: &'static [&'static str],
}

const TAGS: &[TagLexicon] = &[
    TagLexicon { tag: "c#", surface: "C#", cues: &[".NET", "linq", "wpf", "asp.net", "xaml", "winforms", "nuget", "datagridview"] },
    TagLexicon { tag: "java", surface: "Java", cues: &["spring", "jvm", "maven", "hibernate", "jar", "arraylist", "swing", "tomcat"] },
    TagLexicon { tag: "python", surface: "Python", cues: &["django", "pandas", "numpy", "pip", "flask", "dataframe", "def", "matplotlib"] },
    TagLexicon { tag: "javascript", surface: "JavaScript", cues: &["jquery", "node.js", "npm", "dom", "react", "callback", "json", "ajax"] },
    TagLexicon { tag: "php", surface: "PHP", cues: &["laravel", "wordpress", "composer", "symfony", "echo", "mysqli", "apache", "session"] },
    TagLexicon { tag: "c++", surface: "C++", cues: &["std", "vector", "template", "pointer", "cmake", "boost", "stl", "segfault"] },
    TagLexicon { tag: "sql", surface: "SQL", cues: &["query", "join", "select", "postgres", "index", "table", "mysql", "oracle"] },
    TagLexicon { tag: "android", surface: "Android", cues: &["activity", "gradle", "fragment", "kotlin", "layout", "apk", "intent", "emulator"] },
    TagLexicon { tag: "ios", surface: "iOS", cues: &["swift", "xcode", "uikit", "cocoapods", "storyboard", "iphone", "objective", "simulator"] },
    TagLexicon { tag: "html", surface: "HTML", cues: &["css", "div", "bootstrap", "form", "input", "span", "flexbox", "browser"] },
];

const FILLER: &[&str] = &[
    "how", "to", "the", "a", "in", "is", "i", "my", "with", "for", "of", "and", "this", "it", "not", "on", "when",
    "using", "use", "get", "can", "error", "what", "way", "from", "file", "value", "function", "list", "add", "object",
    "string", "data", "class", "method", "code", "array", "return", "type", "new", "set", "find", "create", "working",
    "multiple", "collection", "problem", "call", "time", "test", "exception", "null", "loop", "server", "user",
    "write", "read", "change", "check", "convert", "best", "practice", "performance", "memory", "thread", "async",
    "library", "version", "update", "api", "request", "response", "key", "map", "dictionary", "sort", "filter",
    "parse", "format", "date", "number", "integer", "text", "name", "field", "property", "event", "handler",
    "notified", "once", "should", "why", "does", "doesn't", "after", "before", "between", "without", "inside",
    "custom", "simple", "example", "issue", "unable", "cannot", "instead", "same", "different", "output", "input",
    "print", "console", "window", "button", "click", "path", "directory", "image", "upload", "download", "connection",
    "database", "config", "install", "build", "run", "debug", "release", "compile", "import", "module", "package",
    "script", "variable", "global", "local", "static", "private", "public", "interface", "inheritance", "generic",
];

/// Shape of the generated tag corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n_docs: usize,
    /// Number of tags, taken in order from the built-in lexicon (at most 10).
    pub n_tags: usize,
    /// Probability that the tag's own name occurs in a post carrying the tag.
    pub p_tag_token: f64,
    /// Probability of each cue word of a carried tag.
    pub p_cue: f64,
    /// Probability of each cue word of a tag the post does not carry.
    pub p_foreign_cue: f64,
    /// Probability that a post carries a second tag.
    pub p_second_tag: f64,
    pub filler_range: (usize, usize),
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n_docs: 1500,
            n_tags: 3,
            p_tag_token: 0.45,
            p_cue: 0.12,
            p_foreign_cue: 0.01,
            p_second_tag: 0.08,
            filler_range: (6, 18),
        }
    }
}

impl CorpusConfig {
    pub fn tag_names(&self) -> Vec<String> {
        TAGS.iter().take(self.n_tags.clamp(1, TAGS.len())).map(|t| t.tag.to_string()).collect()
    }
}

/// Programming-question posts with tags. Each post draws one primary tag,
/// sometimes a second; tag names and cue words appear with the configured
/// probabilities among filler words, so a share of posts carry no lexical
/// evidence of their tag.
pub fn tag_corpus(cfg: &CorpusConfig, seed: u64) -> Vec<RawDocument> {
    let tags = &TAGS[..cfg.n_tags.clamp(1, TAGS.len())];
    let mut r = rng::stream(seed, 0xC0);
    let (lo, hi) = cfg.filler_range;
    (0..cfg.n_docs)
        .map(|_| {
            let primary = r.random_range(0..tags.len());
            let mut carried = vec![primary];
            if tags.len() > 1 && r.random_bool(cfg.p_second_tag) {
                let mut second = r.random_range(0..tags.len() - 1);
                if second >= primary {
                    second += 1;
                }
                carried.push(second);
            }
            let mut words: Vec<&str> = Vec::new();
            let n_filler = r.random_range(lo..=hi.max(lo));
            for _ in 0..n_filler {
                // squared uniform skews toward the head of the filler list
                let u: f64 = r.random();
                words.push(FILLER[((u * u) * FILLER.len() as f64) as usize]);
            }
            for (t, lex) in tags.iter().enumerate() {
                let own = carried.contains(&t);
                if own && r.random_bool(cfg.p_tag_token) {
                    words.push(lex.surface);
                }
                for cue in lex.cues {
                    let p = if own { cfg.p_cue } else { cfg.p_foreign_cue };
                    if r.random_bool(p) {
                        words.push(cue);
                    }
                }
            }
            // order-insensitive encoding; shuffle only for readable text
            for i in (1..words.len()).rev() {
                words.swap(i, r.random_range(0..=i));
            }
            let mut text = words.join(" ");
            text.push('?');
            let opener = ["How", "Why", "What", "Which"].choose(&mut r).copied().unwrap_or("How");
            RawDocument {
                text: format!("{opener} {text}"),
                labels: carried.iter().map(|&t| tags[t].tag.to_string()).collect(),
            }
        })
        .collect()
}

/// `n` rows of `d` independent fair bits labelled by `rule`.
pub fn boolean_task(n: usize, d: usize, seed: u64, class_name: &str, rule: impl Fn(&[f64]) -> bool) -> Result<Dataset> {
    let mut r = rng::stream(seed, 0xB0);
    let examples = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| if r.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
            let labels = if rule(&x) { LabelSet::from_indices([0]) } else { LabelSet::default() };
            Ok(LabeledExample { concepts: ConceptVector::new(x)?, labels, raw_text: None })
        })
        .collect::<Result<Vec<_>>>()?;
    let vocab = Vocabulary::new((1..=d).map(|i| format!("x{i}")).collect())?;
    Dataset::new(examples, vocab, vec![class_name.to_string()])
}

/// `y = x1 ∧ x2` over `d` fair bits (features 0 and 1).
pub fn and_task(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    boolean_task(n, d, seed, "y", |x| x[0] > 0.5 && x[1] > 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tokenize;

    #[test]
    fn corpus_is_deterministic_and_tagged() {
        let cfg = CorpusConfig { n_docs: 200, ..Default::default() };
        let a = tag_corpus(&cfg, 1);
        assert_eq!(a, tag_corpus(&cfg, 1));
        assert_ne!(a, tag_corpus(&cfg, 2));
        assert!(a.iter().all(|d| !d.labels.is_empty() && d.labels.len() <= 2));
        let with_cs = a.iter().filter(|d| d.labels.contains(&"c#".to_string())).count();
        assert!(with_cs > 40 && with_cs < 110, "{with_cs}");
    }

    #[test]
    fn corpus_tokens_survive_tokenizer() {
        let cfg = CorpusConfig { n_docs: 300, ..Default::default() };
        let docs = tag_corpus(&cfg, 5);
        let all: Vec<String> = docs.iter().flat_map(|d| tokenize(&d.text)).collect();
        for t in ["c#", ".net", "asp.net", "java", "python"] {
            assert!(all.iter().any(|x| x == t), "missing {t}");
        }
    }

    #[test]
    fn and_task_labels_follow_rule() {
        let ds = and_task(400, 10, 3).unwrap();
        assert_eq!(ds.n_features(), 10);
        for e in &ds.examples {
            assert_eq!(e.labels.contains(0), e.concepts[0] == 1.0 && e.concepts[1] == 1.0);
        }
        let p = ds.prevalence(0);
        assert!((p - 0.25).abs() < 0.06);
    }
}
