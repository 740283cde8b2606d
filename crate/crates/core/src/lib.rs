//! Tabu-search hyperparameter tuning for from-scratch classifiers.
//!
//! The crate covers the whole study pipeline: synthetic or CSV tabular data,
//! KNN imputation, integer encoding, min-max scaling, SMOTE rebalancing, four
//! feature-selection algorithms fanned out into nine feature groups, three
//! tunable learners (gradient-boosted trees, AdaBoost over CART stumps-to-
//! trees, a three-hidden-layer MLP), an AUC-driven tabu-search optimizer with
//! a grid-search baseline, and a 54-cell experiment matrix with report
//! emission.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod feature_selection;
pub mod learners;
pub mod metrics;
pub mod resampling;
pub mod tuning;

pub use error::{Error, Result};
