use serde::{Deserialize, Serialize};

use super::ModelError;

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::InvalidParam(msg.into())
}

/// Full-batch gradient descent on the L2-regularized logistic loss with
/// step `step / (1 + lambda * t)` at epoch `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrParams {
    pub lambda: f64,
    pub epochs: usize,
    pub step: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        LrParams {
            lambda: 1e-4,
            epochs: 200,
            step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbParams {
    /// Additive (Laplace) smoothing.
    pub alpha: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams { alpha: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

/// Number of features considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// `floor(sqrt(d))`, at least 1.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, dim: usize) -> Option<usize> {
        match self {
            MaxFeatures::Sqrt => Some(((dim as f64).sqrt().floor() as usize).max(1)),
            MaxFeatures::All => None,
            MaxFeatures::Count(k) => Some(k.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

/// Deterministic full-batch subgradient descent on the L2-regularized hinge
/// loss with `lambda = 1 / (c * n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSvcParams {
    pub c: f64,
    pub epochs: usize,
}

impl Default for LinearSvcParams {
    fn default() -> Self {
        LinearSvcParams { c: 1.0, epochs: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvcParams {
    pub c: f64,
    /// RBF width; `None` means `1 / d`.
    pub gamma: Option<f64>,
    pub tol: f64,
    /// Iteration cap as a multiple of the training-set size.
    pub max_passes: usize,
    pub cache_mb: usize,
}

impl Default for SvcParams {
    fn default() -> Self {
        SvcParams {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 10,
            cache_mb: 256,
        }
    }
}

/// Single-sample updates on the L2-regularized hinge loss, reshuffled every
/// epoch, with step `1 / (1 + lambda * t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams {
            lambda: 1e-4,
            epochs: 50,
        }
    }
}

/// Settings for every family, keyed by family code in config files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    #[serde(rename = "LR")]
    pub lr: LrParams,
    #[serde(rename = "NB")]
    pub nb: NbParams,
    #[serde(rename = "DT")]
    pub dt: TreeParams,
    #[serde(rename = "RF")]
    pub rf: ForestParams,
    #[serde(rename = "KNN")]
    pub knn: KnnParams,
    #[serde(rename = "LSVC")]
    pub lsvc: LinearSvcParams,
    #[serde(rename = "SVC")]
    pub svc: SvcParams,
    #[serde(rename = "SGD")]
    pub sgd: SgdParams,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let Hyperparams {
            lr,
            nb,
            dt,
            rf,
            knn,
            lsvc,
            svc,
            sgd,
        } = self;
        if !(lr.lambda >= 0.0 && lr.lambda.is_finite()) {
            return Err(invalid("LR.lambda must be finite and non-negative"));
        }
        if !(lr.step > 0.0 && lr.step.is_finite()) || lr.epochs == 0 {
            return Err(invalid("LR.step must be positive and LR.epochs at least 1"));
        }
        if !(nb.alpha > 0.0 && nb.alpha.is_finite()) {
            return Err(invalid("NB.alpha must be positive"));
        }
        if dt.min_samples_split < 2 || rf.min_samples_split < 2 {
            return Err(invalid("min_samples_split must be at least 2"));
        }
        if dt.max_depth == Some(0) || rf.max_depth == Some(0) {
            return Err(invalid("max_depth must be at least 1"));
        }
        if rf.n_trees == 0 {
            return Err(invalid("RF.n_trees must be at least 1"));
        }
        if rf.max_features == MaxFeatures::Count(0) {
            return Err(invalid("RF.max_features must be at least 1"));
        }
        if knn.k == 0 {
            return Err(invalid("KNN.k must be at least 1"));
        }
        if !(lsvc.c > 0.0 && lsvc.c.is_finite()) || lsvc.epochs == 0 {
            return Err(invalid("LSVC.c must be positive and LSVC.epochs at least 1"));
        }
        if !(svc.c > 0.0 && svc.c.is_finite()) || !(svc.tol > 0.0) || svc.max_passes == 0 {
            return Err(invalid("SVC.c and SVC.tol must be positive, SVC.max_passes at least 1"));
        }
        if svc.gamma.is_some_and(|g| !(g > 0.0 && g.is_finite())) {
            return Err(invalid("SVC.gamma must be positive"));
        }
        if !(sgd.lambda > 0.0 && sgd.lambda.is_finite()) || sgd.epochs == 0 {
            return Err(invalid("SGD.lambda must be positive and SGD.epochs at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Hyperparams::default().validate().unwrap();
    }

    #[test]
    fn partial_overrides_keep_defaults() {
        let h: Hyperparams = serde_json::from_str(r#"{"KNN": {"k": 3}, "RF": {"n_trees": 10}}"#).unwrap();
        assert_eq!(h.knn.k, 3);
        assert_eq!(h.rf.n_trees, 10);
        assert!(h.rf.bootstrap);
        assert_eq!(h.lr, LrParams::default());
    }

    #[test]
    fn out_of_range_rejected() {
        let mut h = Hyperparams::default();
        h.knn.k = 0;
        assert!(h.validate().is_err());
        let mut h = Hyperparams::default();
        h.svc.c = -1.0;
        assert!(h.validate().is_err());
        assert!(serde_json::from_str::<Hyperparams>(r#"{"LR": {"lamda": 1.0}}"#).is_err());
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(10_000), Some(100));
        assert_eq!(MaxFeatures::Sqrt.resolve(1), Some(1));
        assert_eq!(MaxFeatures::All.resolve(50), None);
        let m: MaxFeatures = serde_json::from_str(r#"{"count": 7}"#).unwrap();
        assert_eq!(m, MaxFeatures::Count(7));
    }
}
