//! Deterministic execution of the (family, size, proportion, replicate) grid.
//!
//! Seeds are pure functions of cell coordinates via [`stable_hash`]:
//!
//! * sample seed: `stable_hash([master_seed, 0, n, prop_bp, replicate])`
//! * cell seed:   `stable_hash([master_seed, rank + 1, n, prop_bp, replicate])`
//!
//! where `prop_bp` is the proportion in basis points and `rank` is the
//! family's position in canonical order. The sample seed leaves the family
//! out, so every family in a column sees the same draw and split and their
//! scores are paired. The cell seed is recorded in the results and drives
//! training and the bootstrap.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{cap_group_documents, Corpus};
use crate::metrics::evaluate;
use crate::models::{ClassifierRegistry, Family, FeatureKind, Hyperparams};
use crate::rng::stable_hash;
use crate::sampler::{check_degenerate, draw_sample, split, SampleError, SplitSet, SplitStatus};
use crate::textpipe::{fit_feature_space, FeatureSpace, normalize, raw_counts, vectorize, PipelineConfig, SparseVector, TokenList};

/// Exact header of the results CSV.
pub const RESULTS_HEADER: [&str; 13] = [
    "family",
    "n",
    "prop_pos",
    "replicate",
    "seed",
    "status",
    "f1_weighted",
    "ci_lo",
    "ci_hi",
    "auc",
    "n_train",
    "n_test",
    "ms",
];

const SPLIT_TAG: u64 = 1;
const BOOTSTRAP_TAG: u64 = 2;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("results file is missing column {0:?}")]
    MissingColumn(String),
    #[error("results row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("invalid grid config: {0}")]
    InvalidConfig(String),
    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Grid definition; JSON keys match the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub sizes: Vec<usize>,
    /// Class-1 fractions.
    pub proportions: Vec<f64>,
    pub families: Vec<Family>,
    pub replicates: usize,
    pub master_seed: u64,
    pub pipeline: PipelineConfig,
    pub hyperparams: Hyperparams,
    /// Bootstrap resamples for the F1 interval.
    pub bootstrap_b: usize,
    pub ci_level: f64,
    /// Per-group document cap applied before sampling; `null` disables it.
    pub max_per_group: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            sizes: vec![5000, 4000, 3000, 2000, 1000, 800, 600, 500, 400, 200],
            proportions: vec![0.99, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5],
            families: Family::ALL.to_vec(),
            replicates: 1,
            master_seed: 0,
            pipeline: PipelineConfig::default(),
            hyperparams: Hyperparams::default(),
            bootstrap_b: 1000,
            ci_level: 0.95,
            max_per_group: Some(50),
        }
    }
}

impl GridConfig {
    pub fn from_json(text: &str) -> Result<Self, GridError> {
        let cfg: GridConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, GridError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let bad = |m: &str| Err(GridError::InvalidConfig(m.to_string()));
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return bad("sizes must be a non-empty list of positive counts");
        }
        if self.proportions.is_empty() || self.proportions.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return bad("proportions must lie strictly between 0 and 1");
        }
        if self.families.is_empty() {
            return bad("families must not be empty");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.bootstrap_b == 0 {
            return bad("bootstrap_b must be at least 1");
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad("ci_level must lie strictly between 0 and 1");
        }
        if self.max_per_group == Some(0) {
            return bad("max_per_group must be at least 1");
        }
        if self.pipeline.min_df == 0 {
            return bad("pipeline.min_df must be at least 1");
        }
        self.hyperparams
            .validate()
            .map_err(|e| GridError::InvalidConfig(e.to_string()))
    }

    /// Number of cells `run_grid` will emit.
    pub fn n_cells(&self) -> usize {
        let fams: HashSet<Family> = self.families.iter().copied().collect();
        let props: HashSet<u64> = self.proportions.iter().map(|&p| prop_bp(p)).collect();
        let sizes: HashSet<usize> = self.sizes.iter().copied().collect();
        fams.len() * sizes.len() * props.len() * self.replicates
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    Degenerate,
    Failed(String),
}

impl CellStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, CellStatus::Ok)
    }

    pub fn as_string(&self) -> String {
        match self {
            CellStatus::Ok => "OK".to_string(),
            CellStatus::Degenerate => "DEGENERATE".to_string(),
            CellStatus::Failed(r) => format!("FAILED:{r}"),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "OK" => Some(CellStatus::Ok),
            "DEGENERATE" => Some(CellStatus::Degenerate),
            _ => s.strip_prefix("FAILED:").map(|r| CellStatus::Failed(r.to_string())),
        }
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub family: Family,
    pub n: usize,
    pub prop_pos: f64,
    pub replicate: usize,
    pub seed: u64,
    pub status: CellStatus,
    pub f1_weighted: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub auc: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    /// Wall-clock milliseconds; excluded from equality via [`same_results`].
    pub ms: Option<u64>,
}

impl CellResult {
    fn new(family: Family, n: usize, prop_pos: f64, replicate: usize, seed: u64) -> Self {
        CellResult {
            family,
            n,
            prop_pos,
            replicate,
            seed,
            status: CellStatus::Ok,
            f1_weighted: None,
            ci_lo: None,
            ci_hi: None,
            auc: None,
            n_train: 0,
            n_test: 0,
            ms: None,
        }
    }

    pub fn has_metrics(&self) -> bool {
        self.f1_weighted.is_some()
    }

    /// Canonical sort key: family order, then `n` and proportion descending.
    fn sort_key(&self) -> (usize, std::cmp::Reverse<usize>, std::cmp::Reverse<u64>, usize) {
        (
            self.family.rank(),
            std::cmp::Reverse(self.n),
            std::cmp::Reverse(prop_bp(self.prop_pos)),
            self.replicate,
        )
    }
}

/// Sorts results into canonical order.
pub fn canonical_sort(results: &mut [CellResult]) {
    results.sort_by_key(CellResult::sort_key);
}

/// Equality ignoring wall-clock time.
pub fn same_results(a: &[CellResult], b: &[CellResult]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            let mut y = y.clone();
            y.ms = x.ms;
            *x == y
        })
}

/// Proportion in basis points, the integer form used in seeds and keys.
pub fn prop_bp(p: f64) -> u64 {
    (p * 10_000.0).round() as u64
}

pub fn sample_seed(master_seed: u64, n: usize, prop_pos: f64, replicate: usize) -> u64 {
    stable_hash(&[master_seed, 0, n as u64, prop_bp(prop_pos), replicate as u64])
}

pub fn cell_seed(master_seed: u64, family: Family, n: usize, prop_pos: f64, replicate: usize) -> u64 {
    stable_hash(&[
        master_seed,
        family.rank() as u64 + 1,
        n as u64,
        prop_bp(prop_pos),
        replicate as u64,
    ])
}

/// Normalized tokens and labels for every corpus document. Normalization is
/// stateless, so it is computed once and shared by all cells.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub tokens: Vec<TokenList>,
    pub labels: Vec<u8>,
}

impl PreparedCorpus {
    pub fn new(corpus: &Corpus, pipeline: &PipelineConfig) -> Self {
        PreparedCorpus {
            tokens: corpus
                .documents()
                .par_iter()
                .map(|d| normalize(&d.text, pipeline))
                .collect(),
            labels: corpus.labels(),
        }
    }
}

/// Metrics and status of one family on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub status: CellStatus,
    pub f1_weighted: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub auc: Option<f64>,
}

impl CellOutcome {
    fn failed(reason: impl Into<String>) -> Self {
        CellOutcome {
            status: CellStatus::Failed(reason.into()),
            f1_weighted: None,
            ci_lo: None,
            ci_hi: None,
            auc: None,
        }
    }
}

struct Features {
    train: Vec<SparseVector>,
    test: Vec<SparseVector>,
}

struct PreparedSplit<'a> {
    splits: &'a SplitSet,
    status: SplitStatus,
    tfidf: Result<Features, String>,
    counts: Result<Features, String>,
}

fn leakage_guard(splits: &SplitSet) {
    let train: HashSet<usize> = splits.train.members.iter().copied().collect();
    assert!(
        splits.test.members.iter().all(|m| !train.contains(m)),
        "test document found in the training split"
    );
}

fn prepare_split<'a>(data: &PreparedCorpus, splits: &'a SplitSet, min_df: usize) -> PreparedSplit<'a> {
    leakage_guard(splits);
    let train_tokens: Vec<TokenList> = splits
        .train
        .members
        .iter()
        .map(|&m| data.tokens[m].clone())
        .collect();
    // Feature space sees training documents only.
    let space = fit_feature_space(&train_tokens, min_df);
    let build = |f: fn(&TokenList, &FeatureSpace) -> SparseVector| match &space {
        Ok(fs) => Ok(Features {
            train: train_tokens.iter().map(|t| f(t, fs)).collect(),
            test: splits.test.members.iter().map(|&m| f(&data.tokens[m], fs)).collect(),
        }),
        Err(e) => Err(format!("features: {e}")),
    };
    PreparedSplit {
        splits,
        status: check_degenerate(splits),
        tfidf: build(vectorize),
        counts: build(raw_counts),
    }
}

fn run_family(
    prepared: &PreparedSplit<'_>,
    registry: &ClassifierRegistry,
    family: Family,
    cfg: &GridConfig,
    seed: u64,
) -> CellOutcome {
    let splits = prepared.splits;
    let status = match prepared.status {
        SplitStatus::Ok => CellStatus::Ok,
        SplitStatus::Degenerate => CellStatus::Degenerate,
    };
    if !(splits.train.has_both_classes() && splits.test.has_both_classes()) {
        // Nothing meaningful to train or score; report without metrics.
        return CellOutcome {
            status: if status.is_ok() {
                CellStatus::Failed("single-class-split".into())
            } else {
                status
            },
            f1_weighted: None,
            ci_lo: None,
            ci_hi: None,
            auc: None,
        };
    }
    let classifier = match registry.build(family.name(), &cfg.hyperparams) {
        Ok(c) => c,
        Err(e) => return CellOutcome::failed(e.to_string()),
    };
    let features = match classifier.features() {
        FeatureKind::TfIdf => &prepared.tfidf,
        FeatureKind::Counts => &prepared.counts,
    };
    let features = match features {
        Ok(f) => f,
        Err(e) => return CellOutcome::failed(e.clone()),
    };
    let model = match classifier.fit(&features.train, &splits.train.labels, seed) {
        Ok(m) => m,
        Err(e) => return CellOutcome::failed(format!("train: {e}")),
    };
    let scores: Vec<f64> = features.test.iter().map(|x| model.raw_score(x)).collect();
    let threshold = model.threshold();
    let preds: Vec<u8> = scores.iter().map(|&s| u8::from(s > threshold)).collect();
    match evaluate(
        &splits.test.labels,
        &preds,
        &scores,
        cfg.bootstrap_b,
        cfg.ci_level,
        stable_hash(&[seed, BOOTSTRAP_TAG]),
    ) {
        Ok(m) => CellOutcome {
            status,
            f1_weighted: Some(m.f1_weighted),
            ci_lo: Some(m.ci_lo),
            ci_hi: Some(m.ci_hi),
            auc: Some(m.auc),
        },
        Err(e) => CellOutcome::failed(format!("metrics: {e}")),
    }
}

/// Trains and evaluates one family on a given split. Degenerate splits are
/// still evaluated when both train and test hold both classes; otherwise
/// metrics are omitted.
pub fn evaluate_split(
    data: &PreparedCorpus,
    splits: &SplitSet,
    family: Family,
    cfg: &GridConfig,
    seed: u64,
) -> CellOutcome {
    let prepared = prepare_split(data, splits, cfg.pipeline.min_df);
    run_family(&prepared, &ClassifierRegistry::builtin(), family, cfg, seed)
}

fn dedup_sorted<T: Copy, K: Ord>(items: &[T], key: impl Fn(&T) -> K) -> Vec<T> {
    let mut v: Vec<T> = items.to_vec();
    v.sort_by_key(|a| key(a));
    v.dedup_by(|a, b| key(a) == key(b));
    v
}

/// Runs the grid with the built-in classifier registry.
pub fn run_grid(corpus: &Corpus, cfg: &GridConfig, workers: Option<usize>) -> Result<Vec<CellResult>, GridError> {
    run_grid_with(corpus, cfg, workers, &ClassifierRegistry::builtin())
}

/// Runs every cell of `cfg` on `workers` threads (all cores when `None`).
/// Per-cell problems are recorded in the cell status; only configuration
/// errors are returned.
pub fn run_grid_with(
    corpus: &Corpus,
    cfg: &GridConfig,
    workers: Option<usize>,
    registry: &ClassifierRegistry,
) -> Result<Vec<CellResult>, GridError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| GridError::InvalidConfig(format!("thread pool: {e}")))?;

    let corpus = match cfg.max_per_group {
        Some(k) => cap_group_documents(corpus, k),
        None => corpus.clone(),
    };
    let families = dedup_sorted(&cfg.families, |f| f.rank());
    let sizes = dedup_sorted(&cfg.sizes, |&n| std::cmp::Reverse(n));
    let props = dedup_sorted(&cfg.proportions, |&p| std::cmp::Reverse(prop_bp(p)));
    let columns: Vec<(usize, f64, usize)> = sizes
        .iter()
        .flat_map(|&n| props.iter().map(move |&p| (n, p)))
        .flat_map(|(n, p)| (0..cfg.replicates).map(move |r| (n, p, r)))
        .collect();

    let mut results: Vec<CellResult> = pool.install(|| {
        let data = PreparedCorpus::new(&corpus, &cfg.pipeline);
        columns
            .par_iter()
            .flat_map_iter(|&(n, p, r)| run_column(&corpus, &data, cfg, registry, &families, n, p, r))
            .collect()
    });
    canonical_sort(&mut results);
    Ok(results)
}

#[allow(clippy::too_many_arguments)]
fn run_column(
    corpus: &Corpus,
    data: &PreparedCorpus,
    cfg: &GridConfig,
    registry: &ClassifierRegistry,
    families: &[Family],
    n: usize,
    p: f64,
    r: usize,
) -> Vec<CellResult> {
    let started = Instant::now();
    let blank: Vec<CellResult> = families
        .iter()
        .map(|&f| CellResult::new(f, n, p, r, cell_seed(cfg.master_seed, f, n, p, r)))
        .collect();
    let s_seed = sample_seed(cfg.master_seed, n, p, r);
    let sample = match draw_sample(corpus, n, p, s_seed) {
        Ok(s) => s,
        Err(e) => {
            let reason = match e {
                SampleError::Insufficient { .. } => "insufficient-data".to_string(),
                other => other.to_string(),
            };
            return blank
                .into_iter()
                .map(|mut c| {
                    c.status = CellStatus::Failed(reason.clone());
                    c
                })
                .collect();
        }
    };
    let splits = split(&sample, stable_hash(&[s_seed, SPLIT_TAG]));
    let prepared = prepare_split(data, &splits, cfg.pipeline.min_df);
    let shared_ms = started.elapsed();
    blank
        .into_iter()
        .map(|mut c| {
            let t0 = Instant::now();
            let out = run_family(&prepared, registry, c.family, cfg, c.seed);
            c.status = out.status;
            c.f1_weighted = out.f1_weighted;
            c.ci_lo = out.ci_lo;
            c.ci_hi = out.ci_hi;
            c.auc = out.auc;
            c.n_train = splits.train.len();
            c.n_test = splits.test.len();
            c.ms = Some((shared_ms + t0.elapsed()).as_millis() as u64);
            c
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes results as CSV with [`RESULTS_HEADER`]. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_results<W: Write>(results: &[CellResult], out: W) -> Result<(), GridError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for c in results {
        w.write_record([
            c.family.name().to_string(),
            c.n.to_string(),
            c.prop_pos.to_string(),
            c.replicate.to_string(),
            c.seed.to_string(),
            c.status.as_string(),
            fmt_opt(c.f1_weighted),
            fmt_opt(c.ci_lo),
            fmt_opt(c.ci_hi),
            fmt_opt(c.auc),
            c.n_train.to_string(),
            c.n_test.to_string(),
            c.ms.map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn persist(results: &[CellResult], path: &Path) -> Result<(), GridError> {
    write_results(results, File::create(path)?)
}

/// Reads a results CSV. Columns are matched by name; extra columns (such as
/// a provenance note) are ignored.
pub fn read_results<R: Read>(input: R) -> Result<Vec<CellResult>, GridError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let mut col = [0usize; 13];
    for (k, name) in RESULTS_HEADER.iter().enumerate() {
        col[k] = headers
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| GridError::MissingColumn(name.to_string()))?;
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |reason: String| GridError::BadRow { row, reason };
        let field = |k: usize| rec.get(col[k]).unwrap_or("").trim();
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String> {
            s.parse().map_err(|_| format!("cannot parse {name} {s:?}"))
        }
        fn opt(s: &str, name: &str) -> Result<Option<f64>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, name).map(Some)
            }
        }
        let family: Family = field(0).parse().map_err(|e: crate::models::ModelError| bad(e.to_string()))?;
        let status = CellStatus::parse(field(5)).ok_or_else(|| bad(format!("unknown status {:?}", field(5))))?;
        let ms = field(12);
        let cell = CellResult {
            family,
            n: num(field(1), "n").map_err(bad)?,
            prop_pos: num(field(2), "prop_pos").map_err(bad)?,
            replicate: num(field(3), "replicate").map_err(bad)?,
            seed: num(field(4), "seed").map_err(bad)?,
            status,
            f1_weighted: opt(field(6), "f1_weighted").map_err(bad)?,
            ci_lo: opt(field(7), "ci_lo").map_err(bad)?,
            ci_hi: opt(field(8), "ci_hi").map_err(bad)?,
            auc: opt(field(9), "auc").map_err(bad)?,
            n_train: num(field(10), "n_train").map_err(bad)?,
            n_test: num(field(11), "n_test").map_err(bad)?,
            ms: if ms.is_empty() {
                None
            } else {
                Some(num(ms, "ms").map_err(bad)?)
            },
        };
        if cell.status.is_ok() && cell.f1_weighted.is_none() {
            return Err(bad("OK row without f1_weighted".into()));
        }
        let in_unit = |v: Option<f64>| v.map_or(true, |x| (0.0..=1.0).contains(&x));
        if ![cell.f1_weighted, cell.ci_lo, cell.ci_hi, cell.auc].into_iter().all(in_unit) {
            return Err(bad("metric outside [0, 1]".into()));
        }
        out.push(cell);
    }
    Ok(out)
}

pub fn load_results(path: &Path) -> Result<Vec<CellResult>, GridError> {
    read_results(File::open(path)?)
}
