//! Text normalization and TF-IDF vectorization.
//!
//! Normalization runs, in order: lowercase, markup stripping, punctuation
//! to whitespace, whitespace split, stopword removal, suffix stemming and
//! numeric filtering. The stemmer is applied to a fixpoint and stems that
//! land on a stopword are dropped, which makes [`normalize`] idempotent on
//! its own space-joined output.
//!
//! TF is the raw in-document count, IDF is `ln((1 + N) / (1 + df)) + 1` over
//! the `N` training documents, and vectors are L2-normalized.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("every training document is empty after normalization")]
    AllDocumentsEmpty,
    #[error("no term reaches document frequency {min_df}")]
    EmptyVocabulary { min_df: usize },
    #[error("vector indices must be strictly increasing and below dim {dim}")]
    BadIndices { dim: usize },
    #[error("vector values must be finite")]
    NonFiniteValue,
}

/// Switches for [`normalize`] and the vocabulary threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub stem: bool,
    pub drop_numbers: bool,
    pub min_df: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stem: true,
            drop_numbers: false,
            min_df: 1,
        }
    }
}

/// English stopwords removed during normalization (127 entries).
pub const STOPWORDS: [&str; 127] = [
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
    "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
    "for", "with", "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
    "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
    "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
    "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "don", "should", "now",
];

fn stopword_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopword_set().contains(token)
}

/// Ordered list of normalized tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenList(pub Vec<String>);

impl TokenList {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl<S: Into<String>> FromIterator<S> for TokenList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenList(iter.into_iter().map(Into::into).collect())
    }
}

fn strip_markup(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        match rest[start..].find('>') {
            Some(len) => {
                out.push_str(&rest[..start]);
                out.push(' ');
                rest = &rest[start + len + 1..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}

pub fn normalize(text: &str, config: &PipelineConfig) -> TokenList {
    let lowered = text.to_lowercase();
    let stripped = strip_markup(&lowered);
    let spaced: String = stripped
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    spaced
        .split_whitespace()
        .filter(|t| !is_stopword(t))
        .map(|t| if config.stem { stem(t) } else { t.to_string() })
        .filter(|t| !t.is_empty() && !is_stopword(t))
        .filter(|t| !(config.drop_numbers && t.chars().all(|c| c.is_numeric())))
        .collect()
}

/// Suffix-stripping stemmer, applied until no rule fires.
///
/// Rules, first match wins, `stem` is what remains after removing the suffix:
///
/// | suffix | replacement | condition |
/// |--------|-------------|-----------|
/// | `sses` | `ss` | always |
/// | `ies`  | `y`  | stem has at least 2 chars |
/// | `ing`  | none | stem has at least 3 chars and a vowel |
/// | `ed`   | none | stem has at least 3 chars and a vowel |
/// | `es`   | none | stem ends in s, x, z, ch or sh and has at least 3 chars |
/// | `ly`   | none | stem has at least 3 chars |
/// | `s`    | none | word does not end in ss, us or is; stem has at least 3 chars |
///
/// Tokens containing digits or non-ASCII characters are returned unchanged.
pub fn stem(word: &str) -> String {
    if !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut current = word.to_string();
    while let Some(next) = stem_once(&current) {
        current = next;
    }
    current
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(|b| matches!(b, b'a' | b'e' | b'i' | b'o' | b'u' | b'y'))
}

fn stem_once(w: &str) -> Option<String> {
    if let Some(s) = w.strip_suffix("sses") {
        return Some(format!("{s}ss"));
    }
    if let Some(s) = w.strip_suffix("ies") {
        if s.len() >= 2 {
            return Some(format!("{s}y"));
        }
    }
    if let Some(s) = w.strip_suffix("ing") {
        if s.len() >= 3 && has_vowel(s) {
            return Some(s.to_string());
        }
    }
    if let Some(s) = w.strip_suffix("ed") {
        if s.len() >= 3 && has_vowel(s) {
            return Some(s.to_string());
        }
    }
    if let Some(s) = w.strip_suffix("es") {
        let sibilant = ["s", "x", "z", "ch", "sh"].iter().any(|e| s.ends_with(e));
        if sibilant && s.len() >= 3 {
            return Some(s.to_string());
        }
    }
    if let Some(s) = w.strip_suffix("ly") {
        if s.len() >= 3 {
            return Some(s.to_string());
        }
    }
    if let Some(s) = w.strip_suffix('s') {
        let protected = ["ss", "us", "is"].iter().any(|e| w.ends_with(e));
        if !protected && s.len() >= 3 {
            return Some(s.to_string());
        }
    }
    None
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
    dim: usize,
}

impl SparseVector {
    pub fn new(indices: Vec<u32>, values: Vec<f64>, dim: usize) -> Result<Self, TextError> {
        if indices.len() != values.len()
            || indices.windows(2).any(|w| w[0] >= w[1])
            || indices.last().is_some_and(|&i| i as usize >= dim)
        {
            return Err(TextError::BadIndices { dim });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TextError::NonFiniteValue);
        }
        Ok(SparseVector {
            indices,
            values,
            dim,
        })
    }

    /// Builds a vector from a dense slice, keeping non-zero entries.
    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, *v))
            .unzip();
        SparseVector {
            indices,
            values,
            dim: dense.len(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// True for the all-zero vector, which [`vectorize`] returns for
    /// documents without in-vocabulary tokens.
    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&(index as u32)) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// Vocabulary and IDF weights fitted on training documents.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    idf: Vec<f64>,
    n_fitted_docs: usize,
}

impl FeatureSpace {
    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn n_fitted_docs(&self) -> usize {
        self.n_fitted_docs
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.index.get(term).map(|&i| i as usize)
    }

    fn term_counts(&self, doc: &TokenList) -> (Vec<u32>, Vec<f64>) {
        let mut counts: HashMap<u32, f64> = HashMap::new();
        for t in doc.tokens() {
            if let Some(&j) = self.index.get(t) {
                *counts.entry(j).or_insert(0.0) += 1.0;
            }
        }
        let mut pairs: Vec<(u32, f64)> = counts.into_iter().collect();
        pairs.sort_unstable_by_key(|p| p.0);
        pairs.into_iter().unzip()
    }
}

/// Fits the vocabulary (terms with document frequency `>= min_df`, indexed in
/// order of first appearance) and the smoothed IDF weights.
pub fn fit_feature_space(train_docs: &[TokenList], min_df: usize) -> Result<FeatureSpace, TextError> {
    if train_docs.iter().all(TokenList::is_empty) {
        return Err(TextError::AllDocumentsEmpty);
    }
    let min_df = min_df.max(1);
    let mut order: Vec<&str> = Vec::new();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in train_docs {
        let mut counted = HashSet::with_capacity(doc.len());
        for t in doc.tokens() {
            let t = t.as_str();
            if counted.insert(t) {
                let e = df.entry(t).or_insert(0);
                if *e == 0 {
                    order.push(t);
                }
                *e += 1;
            }
        }
    }
    let n = train_docs.len() as f64;
    let mut terms = Vec::new();
    let mut idf = Vec::new();
    for t in order {
        let d = df[t];
        if d >= min_df {
            terms.push(t.to_string());
            idf.push(((1.0 + n) / (1.0 + d as f64)).ln() + 1.0);
        }
    }
    if terms.is_empty() {
        return Err(TextError::EmptyVocabulary { min_df });
    }
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    Ok(FeatureSpace {
        terms,
        index,
        idf,
        n_fitted_docs: train_docs.len(),
    })
}

/// L2-normalized TF-IDF vector; out-of-vocabulary tokens are ignored.
pub fn vectorize(doc: &TokenList, fs: &FeatureSpace) -> SparseVector {
    let (indices, mut values) = fs.term_counts(doc);
    for (v, &j) in values.iter_mut().zip(&indices) {
        *v *= fs.idf[j as usize];
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    SparseVector {
        indices,
        values,
        dim: fs.dim(),
    }
}

/// Unnormalized in-vocabulary term counts.
pub fn raw_counts(doc: &TokenList, fs: &FeatureSpace) -> SparseVector {
    let (indices, values) = fs.term_counts(doc);
    SparseVector {
        indices,
        values,
        dim: fs.dim(),
    }
}
