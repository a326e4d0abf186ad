//! Two-step stacking ensemble toolkit for strain-based CHD screening.
//!
//! The crate provides:
//! - a typed 71-feature cohort schema with CSV loading and stratified
//!   partitioning ([`dataset`]),
//! - feature screening (Welch t-tests), correlation analysis and block-wise
//!   PCA reduction ([`stats`]),
//! - fourteen base classifiers trained from scratch behind one interface
//!   ([`learners`]),
//! - majority/weighted voting, traditional stacking and the two-step
//!   stacking estimator ([`ensemble`]),
//! - evaluation metrics including ROC/AUC ([`metrics`]),
//! - a calibrated synthetic cohort generator ([`synthgen`]),
//! - a config-driven replicated experiment harness ([`experiment`]).

pub mod dataset;
pub mod ensemble;
pub mod experiment;
pub mod learners;
pub mod metrics;
pub mod persist;
pub mod stats;
pub mod synthgen;
