//! Labeled document collections: loading, validation, per-group capping and
//! a synthetic generator with a tunable class separability.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal, WeightedAliasIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::seeded;
use crate::sampler::largest_remainder;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: label {label} is not 0 or 1")]
    InvalidLabel { line: usize, label: i64 },
    #[error("line {line}: duplicate document id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: document {id:?} has empty text")]
    EmptyText { line: usize, id: String },
    #[error("no documents")]
    NoDocuments,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("cannot infer corpus format from {0:?}; use .jsonl or .csv")]
    UnknownFormat(String),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub group_id: String,
    pub label: u8,
    pub text: String,
}

/// An ordered, validated list of documents.
///
/// Construction checks that ids are unique, labels are 0/1 and every text is
/// non-blank. The class counts are cached and always match the list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    n_pos: usize,
    n_neg: usize,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            check_document(doc, i + 1, &mut seen)?;
        }
        Ok(Self::from_validated(documents))
    }

    fn from_validated(documents: Vec<Document>) -> Self {
        let n_pos = documents.iter().filter(|d| d.label == 1).count();
        let n_neg = documents.len() - n_pos;
        Corpus {
            documents,
            n_pos,
            n_neg,
        }
    }

    pub fn empty() -> Self {
        Self::from_validated(Vec::new())
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    /// `(n_neg, n_pos)`.
    pub fn class_counts(&self) -> (usize, usize) {
        (self.n_neg, self.n_pos)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.documents.iter().map(|d| d.label).collect()
    }
}

fn check_document(doc: &Document, line: usize, seen: &mut HashSet<String>) -> Result<()> {
    if doc.label > 1 {
        return Err(CorpusError::InvalidLabel {
            line,
            label: doc.label as i64,
        });
    }
    if doc.text.trim().is_empty() {
        return Err(CorpusError::EmptyText {
            line,
            id: doc.id.clone(),
        });
    }
    if !seen.insert(doc.id.clone()) {
        return Err(CorpusError::DuplicateId {
            line,
            id: doc.id.clone(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("jsonl") || e.eq_ignore_ascii_case("ndjson") => {
                Ok(CorpusFormat::Jsonl)
            }
            Some(e) if e.eq_ignore_ascii_case("csv") => Ok(CorpusFormat::Csv),
            _ => Err(CorpusError::UnknownFormat(path.display().to_string())),
        }
    }
}

// Labels are read as wide integers so that an out-of-range value is reported
// as a label error rather than a generic parse failure.
#[derive(Deserialize)]
struct RawRecord {
    id: String,
    group_id: String,
    label: i64,
    text: String,
}

impl RawRecord {
    fn into_document(self, line: usize) -> Result<Document> {
        if !(0..=1).contains(&self.label) {
            return Err(CorpusError::InvalidLabel {
                line,
                label: self.label,
            });
        }
        Ok(Document {
            id: self.id,
            group_id: self.group_id,
            label: self.label as u8,
            text: self.text,
        })
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let file = File::open(path)?;
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file)),
        CorpusFormat::Csv => read_csv(file),
    }
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                reason: e.to_string(),
            })?;
        let doc = raw.into_document(line_no)?;
        check_document(&doc, line_no, &mut seen)?;
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(CorpusError::NoDocuments);
    }
    Ok(Corpus::from_validated(docs))
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Corpus> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::Malformed {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CorpusError::Malformed {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line_no = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let raw: RawRecord =
            rec.deserialize(Some(&headers))
                .map_err(|e| CorpusError::Malformed {
                    line: line_no,
                    reason: e.to_string(),
                })?;
        let doc = raw.into_document(line_no)?;
        check_document(&doc, line_no, &mut seen)?;
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(CorpusError::NoDocuments);
    }
    Ok(Corpus::from_validated(docs))
}

pub fn write_corpus(corpus: &Corpus, path: &Path, format: CorpusFormat) -> Result<()> {
    let file = File::create(path)?;
    match format {
        CorpusFormat::Jsonl => write_jsonl(corpus, BufWriter::new(file)),
        CorpusFormat::Csv => write_csv(corpus, file),
    }
}

pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for doc in &corpus.documents {
        let line = serde_json::to_string(doc).expect("document serializes");
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv<W: Write>(corpus: &Corpus, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for doc in &corpus.documents {
        wtr.serialize(doc).map_err(|e| CorpusError::Io(e.into()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Keeps at most `max_per_group` documents for each group, taking the first
/// ones in corpus order. Document order is otherwise preserved.
pub fn cap_group_documents(corpus: &Corpus, max_per_group: usize) -> Corpus {
    assert!(max_per_group >= 1, "max_per_group must be at least 1");
    let mut taken: HashMap<&str, usize> = HashMap::new();
    let kept = corpus
        .documents
        .iter()
        .filter(|d| {
            let n = taken.entry(d.group_id.as_str()).or_insert(0);
            *n += 1;
            *n <= max_per_group
        })
        .cloned()
        .collect();
    Corpus::from_validated(kept)
}

/// Parameters of the synthetic corpus generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_docs: usize,
    pub prop_pos: f64,
    pub vocab_size: usize,
    pub doc_len_mean: usize,
    /// Strength of the exponential tilt separating the two class-conditional
    /// word distributions. Zero makes them identical.
    pub separability: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_docs: 1000,
            prop_pos: 0.5,
            vocab_size: 2000,
            doc_len_mean: 60,
            separability: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_docs < 2 {
            return Err(CorpusError::InvalidSpec("n_docs must be at least 2".into()));
        }
        if self.vocab_size < 2 {
            return Err(CorpusError::InvalidSpec("vocab_size must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.prop_pos) {
            return Err(CorpusError::InvalidSpec("prop_pos must lie in [0, 1]".into()));
        }
        if !(self.separability >= 0.0 && self.separability.is_finite()) {
            return Err(CorpusError::InvalidSpec(
                "separability must be finite and non-negative".into(),
            ));
        }
        if self.doc_len_mean == 0 {
            return Err(CorpusError::InvalidSpec("doc_len_mean must be positive".into()));
        }
        Ok(())
    }

    /// Exact `(n_neg, n_pos)` the generator will produce.
    pub fn class_totals(&self) -> (usize, usize) {
        let alloc = largest_remainder(self.n_docs, &[self.prop_pos, 1.0 - self.prop_pos]);
        (alloc[1], alloc[0])
    }
}

/// Word `j` of the synthetic vocabulary. Tokens survive normalization
/// unchanged: they are not stopwords and the stemmer skips tokens with digits.
pub fn synthetic_word(j: usize) -> String {
    format!("term{j:05}")
}

/// The two class-conditional unigram distributions `(class 0, class 1)`.
///
/// Both start from a Zipf(1) base measure over the vocabulary. Each word gets
/// a fixed standard-normal loading `z_j`; class 1 tilts the base by
/// `exp(+s z_j / 2)` and class 0 by `exp(-s z_j / 2)`. The symmetric KL
/// divergence between the two is strictly increasing in `s`.
pub fn class_distributions(spec: &SyntheticSpec) -> (Vec<f64>, Vec<f64>) {
    let mut rng = seeded(spec.seed ^ 0x5A5A_0000_0000_0001);
    let loadings: Vec<f64> = (0..spec.vocab_size)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let tilt = |sign: f64| -> Vec<f64> {
        let w: Vec<f64> = loadings
            .iter()
            .enumerate()
            .map(|(j, z)| (sign * spec.separability * z / 2.0).exp() / (j as f64 + 1.0))
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    };
    (tilt(-1.0), tilt(1.0))
}

/// Draws a corpus from two multinomial unigram models.
///
/// Class sizes are the largest-remainder split of `n_docs` by `prop_pos`;
/// document order interleaves the classes by a seeded shuffle. Every
/// document forms its own group.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Corpus> {
    spec.validate()?;
    let (n_neg, n_pos) = spec.class_totals();
    let (p0, p1) = class_distributions(spec);
    let samplers = [
        WeightedAliasIndex::new(p0).expect("valid weights"),
        WeightedAliasIndex::new(p1).expect("valid weights"),
    ];
    let length = Poisson::new(spec.doc_len_mean as f64).expect("positive mean");

    let mut rng = seeded(spec.seed);
    let mut labels: Vec<u8> = std::iter::repeat(1u8)
        .take(n_pos)
        .chain(std::iter::repeat(0u8).take(n_neg))
        .collect();
    labels.shuffle(&mut rng);

    let words: Vec<String> = (0..spec.vocab_size).map(synthetic_word).collect();
    let docs = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let len = (length.sample(&mut rng) as usize).max(1);
            let mut text = String::with_capacity(len * 10);
            for k in 0..len {
                if k > 0 {
                    text.push(' ');
                }
                text.push_str(&words[samplers[label as usize].sample(&mut rng)]);
            }
            Document {
                id: format!("syn{i:07}"),
                group_id: format!("g{i:07}"),
                label,
                text,
            }
        })
        .collect();
    Ok(Corpus::from_validated(docs))
}
