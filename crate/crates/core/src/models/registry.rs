use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{
    Classifier, DecisionTree, Hyperparams, KNearestNeighbors, LinearSvc, LogisticRegression,
    ModelError, MultinomialNb, RandomForest, RbfSvc, SgdHinge,
};

/// Builds a configured classifier from the shared hyperparameter table.
pub type ClassifierFactory =
    Arc<dyn Fn(&Hyperparams) -> Result<Box<dyn Classifier>, ModelError> + Send + Sync>;

/// Name-keyed table of training strategies. Lookup is case-insensitive.
#[derive(Clone, Default)]
pub struct ClassifierRegistry {
    factories: BTreeMap<String, ClassifierFactory>,
}

impl fmt::Debug for ClassifierRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClassifierRegistry")
            .field("names", &self.names())
            .finish()
    }
}

fn key(name: &str) -> String {
    name.trim().to_ascii_uppercase()
}

impl ClassifierRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The eight classical families.
    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register("LR", |h| Ok(Box::new(LogisticRegression::new(h.lr.clone()))));
        r.register("NB", |h| Ok(Box::new(MultinomialNb::new(h.nb.clone()))));
        r.register("DT", |h| Ok(Box::new(DecisionTree::new(h.dt.clone()))));
        r.register("RF", |h| Ok(Box::new(RandomForest::new(h.rf.clone()))));
        r.register("KNN", |h| Ok(Box::new(KNearestNeighbors::new(h.knn.clone()))));
        r.register("LSVC", |h| Ok(Box::new(LinearSvc::new(h.lsvc.clone()))));
        r.register("SVC", |h| Ok(Box::new(RbfSvc::new(h.svc.clone()))));
        r.register("SGD", |h| Ok(Box::new(SgdHinge::new(h.sgd.clone()))));
        r
    }

    /// Adds or replaces the strategy stored under `name`.
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&Hyperparams) -> Result<Box<dyn Classifier>, ModelError> + Send + Sync + 'static,
    {
        self.factories.insert(key(name), Arc::new(factory));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(&key(name))
    }

    pub fn names(&self) -> Vec<String> {
        self.factories.keys().cloned().collect()
    }

    pub fn build(&self, name: &str, params: &Hyperparams) -> Result<Box<dyn Classifier>, ModelError> {
        let factory = self
            .factories
            .get(&key(name))
            .ok_or_else(|| ModelError::UnknownClassifier(name.to_string()))?;
        factory(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Family;

    #[test]
    fn builtin_covers_every_family() {
        let r = ClassifierRegistry::builtin();
        let h = Hyperparams::default();
        for f in Family::ALL {
            assert_eq!(r.build(f.name(), &h).unwrap().family(), f);
        }
        assert!(r.contains("knn"));
        assert!(matches!(
            r.build("BERT", &h),
            Err(ModelError::UnknownClassifier(_))
        ));
    }

    #[test]
    fn custom_strategy_can_be_registered() {
        let mut r = ClassifierRegistry::new();
        r.register("shallow-tree", |h| {
            let mut p = h.dt.clone();
            p.max_depth = Some(1);
            Ok(Box::new(DecisionTree::new(p)))
        });
        assert_eq!(r.names(), vec!["SHALLOW-TREE".to_string()]);
        assert!(r.build("Shallow-Tree", &Hyperparams::default()).is_ok());
    }
}
