//! Cost-sensitive AdaBoost.
//!
//! This crate trains decision-stump ensembles with plain AdaBoost and eleven
//! cost-sensitive variants, evaluates them with cost-curve metrics (PCF, NEC)
//! and runs a cross-validated benchmark sweep over datasets, cost pairs and
//! algorithms.
//!
//! Module map:
//!
//! - [`weaklearn`]: weighted decision-stump search.
//! - [`boosting`]: the shared training loop and per-algorithm round rules.
//! - [`metrics`]: confusion rates, PCF/NEC, delta rankings, asymmetry.
//! - [`datasets`]: synthetic generators, CSV ingestion, stratified folds.
//! - [`harness`]: experiment configuration, sweep execution and reports.

pub mod boosting;
pub mod datasets;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod sum;
pub mod weaklearn;

pub use boosting::{AlgorithmId, CostPair, StrongClassifier, TrainingTrace};
pub use datasets::{Dataset, FeatureMatrix};
pub use error::{Error, Result};
pub use metrics::{ConfusionRates, ResultRecord};
pub use weaklearn::{ClassMasses, Stump, WeightVector};
