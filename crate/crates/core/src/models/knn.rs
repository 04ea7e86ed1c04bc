use std::cmp::Ordering;

use super::{check_training, Classifier, Family, KnnParams, Model, ModelError};
use crate::textpipe::SparseVector;

/// Stored training set with an inverted index for cosine similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    dim: usize,
    labels: Vec<u8>,
    norms: Vec<f64>,
    /// `postings[j]` lists `(training row, value)` for nonzero feature `j`.
    postings: Vec<Vec<(u32, f64)>>,
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Cosine similarity of `x` to every training row; zero vectors score 0.
    pub fn similarities(&self, x: &SparseVector) -> Vec<f64> {
        let mut acc = vec![0.0; self.labels.len()];
        for (j, v) in x.iter() {
            for &(row, w) in &self.postings[j] {
                acc[row as usize] += v * w;
            }
        }
        let xn = x.norm();
        for (a, &n) in acc.iter_mut().zip(&self.norms) {
            *a = if xn > 0.0 && n > 0.0 { *a / (xn * n) } else { 0.0 };
        }
        acc
    }

    /// Indices of the `k` most similar rows; equal similarity prefers the
    /// lower row index.
    pub fn neighbors(&self, x: &SparseVector) -> Vec<usize> {
        let sims = self.similarities(x);
        let mut idx: Vec<usize> = (0..sims.len()).collect();
        let by_rank = |&a: &usize, &b: &usize| -> Ordering { sims[b].total_cmp(&sims[a]).then(a.cmp(&b)) };
        let k = self.k.min(idx.len());
        if k < idx.len() {
            idx.select_nth_unstable_by(k, by_rank);
            idx.truncate(k);
        }
        idx.sort_unstable_by(by_rank);
        idx
    }
}

impl Model for KnnModel {
    fn family(&self) -> Family {
        Family::KNN
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn threshold(&self) -> f64 {
        0.5
    }

    fn raw_score(&self, x: &SparseVector) -> f64 {
        let nb = self.neighbors(x);
        let pos = nb.iter().filter(|&&i| self.labels[i] == 1).count();
        pos as f64 / nb.len() as f64
    }
}

#[derive(Debug, Clone, Default)]
pub struct KNearestNeighbors {
    params: KnnParams,
}

impl KNearestNeighbors {
    pub fn new(params: KnnParams) -> Self {
        KNearestNeighbors { params }
    }

    pub fn fit_model(&self, x: &[SparseVector], y: &[u8]) -> Result<KnnModel, ModelError> {
        let (_, dim, _) = check_training(x, y, false)?;
        let mut postings = vec![Vec::new(); dim];
        for (row, xi) in x.iter().enumerate() {
            for (j, v) in xi.iter() {
                postings[j].push((row as u32, v));
            }
        }
        Ok(KnnModel {
            k: self.params.k,
            dim,
            labels: y.to_vec(),
            norms: x.iter().map(SparseVector::norm).collect(),
            postings,
        })
    }
}

impl Classifier for KNearestNeighbors {
    fn family(&self) -> Family {
        Family::KNN
    }

    fn fit(&self, x: &[SparseVector], y: &[u8], _seed: u64) -> Result<Box<dyn Model>, ModelError> {
        Ok(Box::new(self.fit_model(x, y)?))
    }
}
