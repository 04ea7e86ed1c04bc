//! RBF-kernel support vector classifier trained by SMO.
//!
//! The dual is `min 1/2 a'Qa - e'a` subject to `0 <= a <= C` and `y'a = 0`,
//! with `Q_ij = y_i y_j K(x_i, x_j)`. Working pairs are chosen with
//! second-order information and kernel rows are kept in an LRU cache.

use std::collections::HashMap;

use super::{check_training, sign, Classifier, Family, Model, ModelError, SvcParams};
use crate::textpipe::SparseVector;

const TAU: f64 = 1e-12;

/// `exp(-gamma * |a - b|^2)`.
pub fn rbf_kernel(a: &SparseVector, b: &SparseVector, gamma: f64) -> f64 {
    let d2 = (a.squared_norm() + b.squared_norm() - 2.0 * a.dot(b)).max(0.0);
    (-gamma * d2).exp()
}

/// Result of the dual optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum_i alpha_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    /// Gradient of the dual objective at `alpha`.
    pub grad: Vec<f64>,
    pub iterations: usize,
    /// False when the iteration cap was reached first.
    pub converged: bool,
}

struct KernelCache<'a> {
    x: &'a [SparseVector],
    sq: Vec<f64>,
    gamma: f64,
    capacity: usize,
    rows: HashMap<usize, (u64, Vec<f64>)>,
    tick: u64,
    dense: Vec<f64>,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a [SparseVector], dim: usize, gamma: f64, cache_mb: usize) -> Self {
        let n = x.len();
        let capacity = ((cache_mb << 20) / (8 * n.max(1))).max(2);
        KernelCache {
            x,
            sq: x.iter().map(SparseVector::squared_norm).collect(),
            gamma,
            capacity,
            rows: HashMap::new(),
            tick: 0,
            dense: vec![0.0; dim],
        }
    }

    fn compute(&mut self, i: usize) -> Vec<f64> {
        for (j, v) in self.x[i].iter() {
            self.dense[j] = v;
        }
        let row = self
            .x
            .iter()
            .zip(&self.sq)
            .map(|(xt, &st)| {
                let d2 = (self.sq[i] + st - 2.0 * xt.dot_dense(&self.dense)).max(0.0);
                (-self.gamma * d2).exp()
            })
            .collect();
        for (j, _) in self.x[i].iter() {
            self.dense[j] = 0.0;
        }
        row
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.tick += 1;
        let tick = self.tick;
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.capacity {
                let oldest = self
                    .rows
                    .iter()
                    .min_by_key(|(_, (t, _))| *t)
                    .map(|(&k, _)| k)
                    .expect("non-empty cache");
                self.rows.remove(&oldest);
            }
            let r = self.compute(i);
            self.rows.insert(i, (tick, r));
        }
        let entry = self.rows.get_mut(&i).expect("row present");
        entry.0 = tick;
        &entry.1
    }
}

/// Solves the dual with second-order working-set selection. Stops when the
/// maximal KKT violation `m(a) - M(a)` drops below `tol` or after
/// `max_iter` pair updates.
pub fn solve_dual(
    x: &[SparseVector],
    y: &[u8],
    c: f64,
    gamma: f64,
    tol: f64,
    max_iter: usize,
    cache_mb: usize,
) -> DualSolution {
    let n = x.len();
    let dim = x.first().map_or(0, SparseVector::dim);
    let ys: Vec<f64> = y.iter().map(|&l| sign(l)).collect();
    let mut cache = KernelCache::new(x, dim, gamma, cache_mb);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    // K(x, x) = 1 for the RBF kernel.
    let diag = 1.0;

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], ys[t]) {
                let v = -ys[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        if i != usize::MAX {
            let ki = cache.row(i).to_vec();
            for t in 0..n {
                if !in_low(alpha[t], ys[t]) {
                    continue;
                }
                let v = -ys[t] * grad[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    let a = (diag + diag - 2.0 * ki[t]).max(TAU);
                    let obj = -(b * b) / a;
                    if obj < best_obj {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            converged = true;
            break;
        }
        iterations += 1;

        let ki = cache.row(i).to_vec();
        let kj = cache.row(j).to_vec();
        let (yi, yj) = (ys[i], ys[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (2.0 - 2.0 * ki[j]).max(TAU);
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += ys[t] * (yi * ki[t] * di + yj * kj[t] * dj);
        }
    }

    DualSolution {
        rho: compute_rho(&alpha, &grad, &ys, c),
        alpha,
        grad,
        iterations,
        converged,
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], ys: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = ys[t] * grad[t];
        if alpha[t] >= c {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum += yg;
        }
    }
    if n_free > 0 {
        sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Support vectors with coefficients `alpha_i y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvcModel {
    dim: usize,
    gamma: f64,
    rho: f64,
    support: Vec<SparseVector>,
    coef: Vec<f64>,
}

impl SvcModel {
    pub fn n_support(&self) -> usize {
        self.support.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Model for SvcModel {
    fn family(&self) -> Family {
        Family::SVC
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn threshold(&self) -> f64 {
        0.0
    }

    fn raw_score(&self, x: &SparseVector) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, &c)| c * rbf_kernel(s, x, self.gamma))
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, Default)]
pub struct RbfSvc {
    params: SvcParams,
}

impl RbfSvc {
    pub fn new(params: SvcParams) -> Self {
        RbfSvc { params }
    }

    pub fn fit_model(&self, x: &[SparseVector], y: &[u8]) -> Result<SvcModel, ModelError> {
        let (n, dim, _) = check_training(x, y, false)?;
        let p = &self.params;
        let gamma = p.gamma.unwrap_or(1.0 / dim as f64);
        let sol = solve_dual(x, y, p.c, gamma, p.tol, p.max_passes * n, p.cache_mb);
        let (support, coef) = sol
            .alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, &a)| (x[i].clone(), a * sign(y[i])))
            .unzip();
        Ok(SvcModel {
            dim,
            gamma,
            rho: sol.rho,
            support,
            coef,
        })
    }
}

impl Classifier for RbfSvc {
    fn family(&self) -> Family {
        Family::SVC
    }

    fn fit(&self, x: &[SparseVector], y: &[u8], _seed: u64) -> Result<Box<dyn Model>, ModelError> {
        Ok(Box::new(self.fit_model(x, y)?))
    }
}
