use super::{check_training, sign, Classifier, Family, LrParams, Model, ModelError};
use crate::textpipe::SparseVector;

/// `w . x + b`, passed through the logistic link for probabilistic families.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub family: Family,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn margin(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }
}

impl Model for LinearModel {
    fn family(&self) -> Family {
        self.family
    }

    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn threshold(&self) -> f64 {
        if self.family.is_probabilistic() {
            0.5
        } else {
            0.0
        }
    }

    fn raw_score(&self, x: &SparseVector) -> f64 {
        let m = self.margin(x);
        if self.family.is_probabilistic() {
            sigmoid(m)
        } else {
            m
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log-loss plus `lambda / 2 * |w|^2` (bias unpenalized), with its
/// gradient. Returns `(loss, grad_w, grad_b)`.
pub fn logistic_objective(
    x: &[SparseVector],
    y: &[u8],
    w: &[f64],
    b: f64,
    lambda: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let z = xi.dot_dense(w) + b;
        // -log p(y | x) = softplus(-s z) with s = +-1.
        loss += softplus(-sign(yi) * z);
        let r = sigmoid(z) - f64::from(yi);
        for (j, v) in xi.iter() {
            grad_w[j] += r * v;
        }
        grad_b += r;
    }
    loss /= n;
    grad_b /= n;
    let mut sq = 0.0;
    for (g, &wj) in grad_w.iter_mut().zip(w) {
        *g = *g / n + lambda * wj;
        sq += wj * wj;
    }
    (loss + 0.5 * lambda * sq, grad_w, grad_b)
}

#[derive(Debug, Clone, Default)]
pub struct LogisticRegression {
    params: LrParams,
}

impl LogisticRegression {
    pub fn new(params: LrParams) -> Self {
        LogisticRegression { params }
    }

    /// Fits and returns the model with the objective value before each
    /// epoch and after the last one.
    pub fn fit_with_trace(&self, x: &[SparseVector], y: &[u8]) -> Result<(LinearModel, Vec<f64>), ModelError> {
        let (_, dim, _) = check_training(x, y, false)?;
        let p = &self.params;
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut trace = Vec::with_capacity(p.epochs + 1);
        for t in 0..p.epochs {
            let (loss, gw, gb) = logistic_objective(x, y, &w, b, p.lambda);
            trace.push(loss);
            let eta = p.step / (1.0 + p.lambda * t as f64);
            for (wj, g) in w.iter_mut().zip(&gw) {
                *wj -= eta * g;
            }
            b -= eta * gb;
        }
        trace.push(logistic_objective(x, y, &w, b, p.lambda).0);
        let model = LinearModel {
            family: Family::LR,
            weights: w,
            bias: b,
        };
        Ok((model, trace))
    }
}

impl Classifier for LogisticRegression {
    fn family(&self) -> Family {
        Family::LR
    }

    fn fit(&self, x: &[SparseVector], y: &[u8], _seed: u64) -> Result<Box<dyn Model>, ModelError> {
        Ok(Box::new(self.fit_with_trace(x, y)?.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<SparseVector>, Vec<u8>) {
        let x = vec![
            SparseVector::from_dense(&[1.0, 0.0]),
            SparseVector::from_dense(&[0.8, 0.6]),
            SparseVector::from_dense(&[0.0, 1.0]),
            SparseVector::from_dense(&[0.6, 0.8]),
        ];
        (x, vec![1, 1, 0, 0])
    }

    #[test]
    fn objective_at_origin() {
        let (x, y) = toy();
        let (loss, gw, gb) = logistic_objective(&x, &y, &[0.0, 0.0], 0.0, 0.1);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(gb.abs() < 1e-12);
        assert!((gw[0] - (-(1.0 + 0.8) + 0.6) / 8.0).abs() < 1e-12);
    }

    #[test]
    fn separates_toy_data() {
        let (x, y) = toy();
        let m = LogisticRegression::default().fit(&x, &y, 0).unwrap();
        let pred: Vec<u8> = x.iter().map(|v| m.predict(v).unwrap()).collect();
        assert_eq!(pred, y);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-9);
    }
}
