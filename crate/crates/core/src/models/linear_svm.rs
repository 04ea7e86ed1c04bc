use rand::seq::SliceRandom;

use super::{check_training, sign, Classifier, Family, LinearModel, LinearSvcParams, Model, ModelError, SgdParams};
use crate::rng::seeded;
use crate::textpipe::SparseVector;

/// Hinge loss minimized by deterministic full-batch subgradient steps
/// (Pegasos with the whole training set as the batch). The bias is carried
/// as a constant feature and is therefore regularized too.
#[derive(Debug, Clone, Default)]
pub struct LinearSvc {
    params: LinearSvcParams,
}

impl LinearSvc {
    pub fn new(params: LinearSvcParams) -> Self {
        LinearSvc { params }
    }

    pub fn fit_model(&self, x: &[SparseVector], y: &[u8]) -> Result<LinearModel, ModelError> {
        let (n, dim, _) = check_training(x, y, false)?;
        let lambda = 1.0 / (self.params.c * n as f64);
        let radius = 1.0 / lambda.sqrt();
        // Last slot is the bias.
        let mut w = vec![0.0; dim + 1];
        let mut step = vec![0.0; dim + 1];
        for t in 1..=self.params.epochs {
            let eta = 1.0 / (lambda * t as f64);
            step.iter_mut().for_each(|s| *s = 0.0);
            for (xi, &yi) in x.iter().zip(y) {
                let s = sign(yi);
                if s * (xi.dot_dense(&w[..dim]) + w[dim]) < 1.0 {
                    for (j, v) in xi.iter() {
                        step[j] += s * v;
                    }
                    step[dim] += s;
                }
            }
            let shrink = 1.0 - eta * lambda;
            let scale = eta / n as f64;
            for (wj, sj) in w.iter_mut().zip(&step) {
                *wj = shrink * *wj + scale * sj;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let f = radius / norm;
                w.iter_mut().for_each(|v| *v *= f);
            }
        }
        let bias = w.pop().expect("bias slot");
        Ok(LinearModel {
            family: Family::LSVC,
            weights: w,
            bias,
        })
    }
}

impl Classifier for LinearSvc {
    fn family(&self) -> Family {
        Family::LSVC
    }

    fn fit(&self, x: &[SparseVector], y: &[u8], _seed: u64) -> Result<Box<dyn Model>, ModelError> {
        Ok(Box::new(self.fit_model(x, y)?))
    }
}

/// Hinge loss minimized by single-sample updates over a reshuffled pass per
/// epoch. Step `1 / (1 + lambda * t)` at global step `t`; bias unregularized.
#[derive(Debug, Clone, Default)]
pub struct SgdHinge {
    params: SgdParams,
}

impl SgdHinge {
    pub fn new(params: SgdParams) -> Self {
        SgdHinge { params }
    }

    pub fn fit_model(&self, x: &[SparseVector], y: &[u8], seed: u64) -> Result<LinearModel, ModelError> {
        let (n, dim, _) = check_training(x, y, false)?;
        let lambda = self.params.lambda;
        let mut rng = seeded(seed);
        let mut order: Vec<usize> = (0..n).collect();
        // w = scale * v so the shrink step is O(1).
        let mut v = vec![0.0; dim];
        let mut scale = 1.0;
        let mut bias = 0.0;
        let mut t = 0u64;
        for _ in 0..self.params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let eta = 1.0 / (1.0 + lambda * t as f64);
                let s = sign(y[i]);
                let margin = scale * x[i].dot_dense(&v) + bias;
                scale *= 1.0 - eta * lambda;
                if s * margin < 1.0 {
                    let g = eta * s / scale;
                    for (j, xv) in x[i].iter() {
                        v[j] += g * xv;
                    }
                    bias += eta * s;
                }
                if scale < 1e-9 {
                    v.iter_mut().for_each(|c| *c *= scale);
                    scale = 1.0;
                }
                t += 1;
            }
        }
        v.iter_mut().for_each(|c| *c *= scale);
        Ok(LinearModel {
            family: Family::SGD,
            weights: v,
            bias,
        })
    }
}

impl Classifier for SgdHinge {
    fn family(&self) -> Family {
        Family::SGD
    }

    fn fit(&self, x: &[SparseVector], y: &[u8], seed: u64) -> Result<Box<dyn Model>, ModelError> {
        Ok(Box::new(self.fit_model(x, y, seed)?))
    }
}
