//! Monotone preference functions on a lattice of integer criteria scores.
//!
//! Fits interpolate between a non-negative linear regression and a full
//! isotonic regression, with the amount of regularization chosen by a
//! held-out split. Around the estimator sit the error metrics, a synthetic
//! benchmark, counterexample constructions for linear models, and CSV/JSON
//! plumbing.

pub mod cv;
pub mod dag;
pub mod dataset;
pub mod error;
pub mod io;
pub mod isotonic;
pub mod lattice;
pub mod linear;
mod lsq;
pub mod metrics;
pub mod mismatch;
pub mod postprocess;
pub mod rls;
pub mod rng;
pub mod synth;

pub use cv::{cross_validate, CvResult, LambdaGrid};
pub use dag::{is_isotonic, ConstraintGraph, IsotonicAssignment, OrderDag};
pub use dataset::{Dataset, EvaluationRecord, Summary};
pub use error::{Error, Result};
pub use isotonic::{isotonic_fit, WeightedTargets};
pub use lattice::{compare, CriteriaVector, Dominance, LatticeSpec};
pub use linear::{nnls_fit, LinearModel};
pub use postprocess::{post_process, ExtensionMode, PreferenceFn, PreferenceModel};
pub use rls::{rls_solve, rls_solve_with, Init, Lambda, RlsOptions, RlsSolution};
