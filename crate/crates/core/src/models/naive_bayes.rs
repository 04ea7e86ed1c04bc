use super::logistic::sigmoid;
use super::{check_training, Classifier, FeatureKind, Family, Model, ModelError, NbParams};
use crate::textpipe::SparseVector;

/// Multinomial naive Bayes over raw term counts.
#[derive(Debug, Clone, PartialEq)]
pub struct NbModel {
    /// Indexed by class; `-inf` for a class absent from training.
    pub log_prior: [f64; 2],
    /// `log_lik[c][j]` is the smoothed log-probability of term `j` in class `c`.
    pub log_lik: [Vec<f64>; 2],
}

impl NbModel {
    fn joint(&self, x: &SparseVector) -> [f64; 2] {
        [0, 1].map(|c| self.log_prior[c] + x.dot_dense(&self.log_lik[c]))
    }

    /// `[P(y=0|x), P(y=1|x)]`.
    pub fn posterior(&self, x: &SparseVector) -> [f64; 2] {
        // Prior-only fallback: a class never seen in training has zero mass.
        if self.log_prior[0] == f64::NEG_INFINITY {
            return [0.0, 1.0];
        }
        if self.log_prior[1] == f64::NEG_INFINITY {
            return [1.0, 0.0];
        }
        let [l0, l1] = self.joint(x);
        let p1 = sigmoid(l1 - l0);
        [1.0 - p1, p1]
    }
}

impl Model for NbModel {
    fn family(&self) -> Family {
        Family::NB
    }

    fn dim(&self) -> usize {
        self.log_lik[0].len()
    }

    fn threshold(&self) -> f64 {
        0.5
    }

    fn raw_score(&self, x: &SparseVector) -> f64 {
        self.posterior(x)[1]
    }
}

#[derive(Debug, Clone, Default)]
pub struct MultinomialNb {
    params: NbParams,
}

impl MultinomialNb {
    pub fn new(params: NbParams) -> Self {
        MultinomialNb { params }
    }

    pub fn fit_model(&self, x: &[SparseVector], y: &[u8]) -> Result<NbModel, ModelError> {
        let (n, dim, n_pos) = check_training(x, y, true)?;
        let alpha = self.params.alpha;
        let mut counts = [vec![0.0; dim], vec![0.0; dim]];
        for (xi, &yi) in x.iter().zip(y) {
            for (j, v) in xi.iter() {
                counts[yi as usize][j] += v;
            }
        }
        let class_n = [n - n_pos, n_pos];
        let log_prior = class_n.map(|c| {
            if c == 0 {
                f64::NEG_INFINITY
            } else {
                (c as f64 / n as f64).ln()
            }
        });
        let log_lik = counts.map(|row| {
            let total: f64 = row.iter().sum::<f64>() + alpha * dim as f64;
            row.iter().map(|&c| ((c + alpha) / total).ln()).collect()
        });
        Ok(NbModel { log_prior, log_lik })
    }
}

impl Classifier for MultinomialNb {
    fn family(&self) -> Family {
        Family::NB
    }

    fn features(&self) -> FeatureKind {
        FeatureKind::Counts
    }

    fn fit(&self, x: &[SparseVector], y: &[u8], _seed: u64) -> Result<Box<dyn Model>, ModelError> {
        Ok(Box::new(self.fit_model(x, y)?))
    }
}
