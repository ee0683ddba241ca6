//! Lossless linear and logistic regression on compressed data.
//!
//! Observation-level rows are compressed into per-feature-vector sufficient
//! statistics (Σy, Σy², count), from which the coefficients and the
//! homoskedastic, heteroskedasticity-consistent and cluster-robust sandwich
//! covariances are recovered exactly. Clustered data can additionally be
//! compressed by whole-cluster feature blocks or by a static/dynamic column
//! split, with a Kronecker-factored path for balanced panels.

pub mod compress;
pub mod error;
pub mod estimate;
pub mod io;
pub mod linalg;
pub mod logistic;
pub mod model;
#[cfg(feature = "oracle")]
pub mod oracle;

pub use error::{Error, Result};
pub use model::{
    ClusterLabels, ClusterStatsTable, ClusterStrategy, Covariance, CovarianceSpec, Diagnostics, FitResult,
    ObservationSet, PanelStatsTable, SuffStatsTable, TableKind, WeightKind,
};
