//! Analysis toolkit for binary-trait transmission on contact networks built
//! from friendship nominations.
//!
//! The pipeline: [`ingest`] reads a cohort and its nominations, [`graph`]
//! collapses them into layered undirected networks, and the estimators test
//! and quantify clustering of the trait along edges:
//!
//! * [`permutation`]: fixed-topology attribute randomization tests,
//! * [`ergm`]: dyad-independent exponential random graph models,
//! * [`autocorr`]: network autocorrelation (spatial-lag) models,
//! * [`exposure`]: logistic regression on friends' trait status,
//! * [`stats`]: classical univariable tables.
//!
//! [`synth`] generates cohorts with planted structure for validation, and
//! [`report`] holds the serialized result types and renderers used by the
//! `contactnet` binary.

pub mod autocorr;
pub mod design;
pub mod ergm;
pub mod error;
pub mod exposure;
pub mod graph;
pub mod ingest;
pub mod linalg;
pub mod logistic;
pub mod permutation;
pub mod report;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
pub use nalgebra;
