//! Empirical sample-size estimation for binary document classification.
//!
//! The crate sweeps sample sizes, class proportions and classifier families
//! over a labeled corpus and reports weighted F1 (with bootstrap confidence
//! intervals) and AUC for every grid cell:
//!
//! * [`corpus`] loads, validates, caps and synthesizes document collections.
//! * [`textpipe`] normalizes text and builds train-only TF-IDF feature spaces.
//! * [`sampler`] draws stratified samples and splits them 60/20/20.
//! * [`models`] holds the classifier families behind a name-keyed registry.
//! * [`metrics`] computes per-class and weighted F1, bootstrap CIs and AUC.
//! * [`gridrunner`] executes the grid deterministically and persists results.
//! * [`report`] summarizes result tables and answers sample-size queries.

pub mod corpus;
pub mod gridrunner;
pub mod metrics;
pub mod models;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod textpipe;

pub use corpus::{Corpus, Document};
pub use gridrunner::{CellResult, CellStatus, GridConfig};
pub use models::{Family, Model};
pub use textpipe::{FeatureSpace, SparseVector};
