//! Classifier families behind a common train/score/predict contract.
//!
//! Each family implements [`Classifier`], which fits a boxed [`Model`].
//! Families are looked up by name in a [`ClassifierRegistry`]; the built-in
//! registry carries the eight classical families, and callers may register
//! further strategies under new names.
//!
//! Probabilistic models (LR, NB, DT, RF, KNN) threshold their score at 0.5,
//! margin models (LSVC, SVC, SGD) at 0. A score equal to the threshold
//! predicts class 0.

mod knn;
mod linear_svm;
mod logistic;
mod naive_bayes;
mod params;
mod registry;
mod svc;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textpipe::SparseVector;

pub use knn::{KNearestNeighbors, KnnModel};
pub use linear_svm::{LinearSvc, SgdHinge};
pub use logistic::{logistic_objective, LinearModel, LogisticRegression};
pub use naive_bayes::{MultinomialNb, NbModel};
pub use params::{
    ForestParams, Hyperparams, KnnParams, LinearSvcParams, LrParams, MaxFeatures, NbParams,
    SgdParams, SvcParams, TreeParams,
};
pub use registry::{ClassifierFactory, ClassifierRegistry};
pub use svc::{rbf_kernel, solve_dual, DualSolution, RbfSvc, SvcModel};
pub use tree::{DecisionTree, ForestModel, RandomForest, TreeModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("training set has {0} samples but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 training samples, got {0}")]
    TooFewSamples(usize),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("feature space is empty")]
    EmptyFeatureSpace,
    #[error("dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label {0} is not 0 or 1")]
    BadLabel(u8),
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("unknown classifier {0:?}")]
    UnknownClassifier(String),
}

/// Classifier families, declared in canonical reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    LR,
    NB,
    DT,
    RF,
    KNN,
    LSVC,
    SVC,
    SGD,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::LR,
        Family::NB,
        Family::DT,
        Family::RF,
        Family::KNN,
        Family::LSVC,
        Family::SVC,
        Family::SGD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::LR => "LR",
            Family::NB => "NB",
            Family::DT => "DT",
            Family::RF => "RF",
            Family::KNN => "KNN",
            Family::LSVC => "LSVC",
            Family::SVC => "SVC",
            Family::SGD => "SGD",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Family::LR => "logistic regression",
            Family::NB => "multinomial naive Bayes",
            Family::DT => "decision tree",
            Family::RF => "random forest",
            Family::KNN => "k-nearest neighbours",
            Family::LSVC => "linear support vector classifier",
            Family::SVC => "support vector classifier",
            Family::SGD => "stochastic gradient descent",
        }
    }

    /// Position in canonical order, starting at 0.
    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn is_probabilistic(self) -> bool {
        !matches!(self, Family::LSVC | Family::SVC | Family::SGD)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::UnknownClassifier(s.to_string()))
    }
}

/// Which document representation a family consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// L2-normalized TF-IDF.
    TfIdf,
    /// Raw in-vocabulary term counts.
    Counts,
}

/// A trained classifier. Implementations are immutable and shareable.
pub trait Model: Send + Sync + fmt::Debug {
    fn family(&self) -> Family;

    /// Feature dimension seen during training.
    fn dim(&self) -> usize;

    /// Score above which [`Model::predict`] returns 1.
    fn threshold(&self) -> f64;

    /// Score without the dimension check.
    fn raw_score(&self, x: &SparseVector) -> f64;

    fn score(&self, x: &SparseVector) -> Result<f64, ModelError> {
        if x.dim() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(self.raw_score(x))
    }

    fn predict(&self, x: &SparseVector) -> Result<u8, ModelError> {
        Ok(u8::from(self.score(x)? > self.threshold()))
    }
}

/// A training strategy for one family.
pub trait Classifier: Send + Sync {
    fn family(&self) -> Family;

    fn features(&self) -> FeatureKind {
        FeatureKind::TfIdf
    }

    fn fit(&self, x: &[SparseVector], y: &[u8], seed: u64) -> Result<Box<dyn Model>, ModelError>;
}

/// Trains `family` with `params` through the built-in registry.
pub fn train(
    family: Family,
    params: &Hyperparams,
    x: &[SparseVector],
    y: &[u8],
    seed: u64,
) -> Result<Box<dyn Model>, ModelError> {
    ClassifierRegistry::builtin()
        .build(family.name(), params)?
        .fit(x, y, seed)
}

/// Shared input checks. Returns `(n_samples, dim, n_positive)`.
pub(crate) fn check_training(
    x: &[SparseVector],
    y: &[u8],
    allow_single_class: bool,
) -> Result<(usize, usize, usize), ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(ModelError::TooFewSamples(x.len()));
    }
    if let Some(&bad) = y.iter().find(|&&l| l > 1) {
        return Err(ModelError::BadLabel(bad));
    }
    let dim = x[0].dim();
    if dim == 0 {
        return Err(ModelError::EmptyFeatureSpace);
    }
    if let Some(v) = x.iter().find(|v| v.dim() != dim) {
        return Err(ModelError::DimensionMismatch {
            expected: dim,
            got: v.dim(),
        });
    }
    let n_pos = y.iter().filter(|&&l| l == 1).count();
    if !allow_single_class && (n_pos == 0 || n_pos == y.len()) {
        return Err(ModelError::SingleClass);
    }
    Ok((x.len(), dim, n_pos))
}

/// +1 / -1 encoding of a 0/1 label.
pub(crate) fn sign(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}
