//! Template attribute vectors.
//!
//! Semantic mode turns each template into words (compound words split,
//! non-alphabetic tokens and stop words dropped), weights the words by TF-IDF
//! with one document per template, and sums the pre-trained word vectors under
//! those weights. One-hot mode gives every template its own basis vector.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::drain::WILDCARD;
use crate::error::{Error, Result};

/// Standard English stop words.
pub const STOP_WORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "ain",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "aren",
    "aren't",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "couldn",
    "couldn't",
    "d",
    "did",
    "didn",
    "didn't",
    "do",
    "does",
    "doesn",
    "doesn't",
    "doing",
    "don",
    "don't",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "hadn",
    "hadn't",
    "has",
    "hasn",
    "hasn't",
    "have",
    "haven",
    "haven't",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "isn",
    "isn't",
    "it",
    "it's",
    "its",
    "itself",
    "just",
    "ll",
    "m",
    "ma",
    "me",
    "mightn",
    "mightn't",
    "more",
    "most",
    "mustn",
    "mustn't",
    "my",
    "myself",
    "needn",
    "needn't",
    "no",
    "nor",
    "not",
    "now",
    "o",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "re",
    "s",
    "same",
    "shan",
    "shan't",
    "she",
    "she's",
    "should",
    "should've",
    "shouldn",
    "shouldn't",
    "so",
    "some",
    "such",
    "t",
    "than",
    "that",
    "that'll",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "ve",
    "very",
    "was",
    "wasn",
    "wasn't",
    "we",
    "were",
    "weren",
    "weren't",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "won",
    "won't",
    "wouldn",
    "wouldn't",
    "y",
    "you",
    "you'd",
    "you'll",
    "you're",
    "you've",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

pub fn is_stop_word(word: &str) -> bool {
    STOP_WORDS.binary_search(&word).is_ok()
}

/// Splits on `_`/`-` and at camel-case boundaries (`WriteBlock` → `Write`,
/// `Block`; `HTTPServer` → `HTTP`, `Server`).
pub fn split_compound(token: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for piece in token.split(['_', '-']) {
        let chars: Vec<char> = piece.chars().collect();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if i > 0 && c.is_uppercase() {
                let prev = chars[i - 1];
                let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
                if prev.is_lowercase() || (prev.is_uppercase() && next_lower) {
                    parts.push(core::mem::take(&mut current));
                }
            }
            current.push(c);
        }
        if !current.is_empty() {
            parts.push(current);
        }
    }
    parts.retain(|p| !p.is_empty());
    parts
}

/// Template tokens to lowercase content words.
pub fn preprocess<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| *t != WILDCARD)
        .flat_map(split_compound)
        .filter(|p| p.chars().all(|c| c.is_ascii_alphabetic()))
        .map(|p| p.to_ascii_lowercase())
        .filter(|p| !is_stop_word(p))
        .collect()
}

/// Pre-trained word vectors of one fixed dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
    duplicates: usize,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Self {
        WordVectorTable {
            dim,
            vectors: BTreeMap::new(),
            duplicates: 0,
        }
    }

    /// Adds a vector; a repeated word replaces the earlier vector.
    pub fn insert(&mut self, word: String, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::ShapeMismatch {
                op: "word vector",
                expected: (1, self.dim),
                found: (1, vector.len()),
            });
        }
        if self.vectors.insert(word, vector).is_some() {
            self.duplicates += 1;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// How many inserts replaced an existing word.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

/// Per-template word weights, `tf(w, t) * ln(N / df(w))`.
pub fn tfidf<S: AsRef<str>>(corpus: &[Vec<S>]) -> Result<Vec<BTreeMap<String, f64>>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = corpus.len() as f64;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let distinct: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
        for w in distinct {
            *df.entry(w).or_default() += 1;
        }
    }
    Ok(corpus
        .iter()
        .map(|doc| {
            let mut tf: BTreeMap<String, f64> = BTreeMap::new();
            for w in doc {
                *tf.entry(String::from(w.as_ref())).or_default() += 1.0;
            }
            let len = doc.len() as f64;
            for (w, weight) in tf.iter_mut() {
                let idf = libm::log(n / df[w.as_str()] as f64);
                *weight = *weight / len * idf;
            }
            tf
        })
        .collect())
}

/// Weighted sum of word vectors; out-of-vocabulary words are skipped.
pub fn embed_template(weights: &BTreeMap<String, f64>, table: &WordVectorTable) -> Vec<f64> {
    let mut out = vec![0.0; table.dim()];
    for (word, &w) in weights {
        if let Some(v) = table.get(word) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += w * x;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    Semantic,
    Onehot,
}

/// Row `i` is the attribute vector of template `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateEmbeddingTable {
    pub mode: EmbeddingMode,
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

impl TemplateEmbeddingTable {
    pub fn row(&self, template_id: usize) -> Option<&[f64]> {
        self.rows.get(template_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Identity rows, one per template.
pub fn onehot_table(n_templates: usize) -> TemplateEmbeddingTable {
    let rows = (0..n_templates)
        .map(|i| {
            let mut r = vec![0.0; n_templates];
            r[i] = 1.0;
            r
        })
        .collect();
    TemplateEmbeddingTable {
        mode: EmbeddingMode::Onehot,
        dim: n_templates,
        rows,
    }
}

/// Full semantic pipeline over every template's token list.
pub fn semantic_table<S: AsRef<str>>(templates: &[Vec<S>], table: &WordVectorTable) -> Result<TemplateEmbeddingTable> {
    let corpus: Vec<Vec<String>> = templates.iter().map(|t| preprocess(t)).collect();
    let weights = tfidf(&corpus)?;
    Ok(TemplateEmbeddingTable {
        mode: EmbeddingMode::Semantic,
        dim: table.dim(),
        rows: weights.iter().map(|w| embed_template(w, table)).collect(),
    })
}
