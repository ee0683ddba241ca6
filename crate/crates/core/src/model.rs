//! Shared data types: raw observations, the compressed representations, and
//! fit results.
//!
//! Every type here is immutable once constructed. Constructors validate their
//! invariants, so a value that exists is a value that holds them.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// How observation weights are interpreted. Only the dispersion denominator
/// depends on this; the estimating equations are shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    Frequency,
    Analytic,
}

impl WeightKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightKind::Frequency => "freq",
            WeightKind::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub values: Vec<f64>,
    pub kind: WeightKind,
}

/// Opaque cluster labels interned to dense indices in order of first
/// appearance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterLabels {
    labels: Vec<String>,
    index: Vec<usize>,
}

impl ClusterLabels {
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lookup: HashMap<String, usize> = HashMap::new();
        let mut out = ClusterLabels::default();
        for label in labels {
            let label = label.as_ref();
            let next = out.labels.len();
            let idx = *lookup.entry(label.to_owned()).or_insert_with(|| {
                out.labels.push(label.to_owned());
                next
            });
            out.index.push(idx);
        }
        out
    }

    /// Builds labels from already-dense indices. `labels[i]` names cluster `i`.
    pub fn from_indices(labels: Vec<String>, index: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = index.iter().find(|&&i| i >= labels.len()) {
            return Err(Error::DimensionMismatch(format!(
                "cluster index {bad} out of range for {} labels",
                labels.len()
            )));
        }
        Ok(ClusterLabels { labels, index })
    }

    /// Number of rows labelled.
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Dense cluster index per row.
    pub fn index(&self) -> &[usize] {
        &self.index
    }

    pub fn label_of_row(&self, row: usize) -> &str {
        &self.labels[self.index[row]]
    }
}

/// Uncompressed observation-level data.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    features: DMatrix<f64>,
    feature_names: Vec<String>,
    outcomes: DMatrix<f64>,
    outcome_names: Vec<String>,
    weights: Option<Weights>,
    clusters: Option<ClusterLabels>,
}

impl ObservationSet {
    pub fn new(
        features: DMatrix<f64>,
        feature_names: Vec<String>,
        outcomes: DMatrix<f64>,
        outcome_names: Vec<String>,
    ) -> Result<Self> {
        Self::from_parts(features, feature_names, outcomes, outcome_names, None, None)
    }

    pub fn from_parts(
        features: DMatrix<f64>,
        feature_names: Vec<String>,
        outcomes: DMatrix<f64>,
        outcome_names: Vec<String>,
        weights: Option<Weights>,
        clusters: Option<ClusterLabels>,
    ) -> Result<Self> {
        let obs = ObservationSet {
            features,
            feature_names,
            outcomes,
            outcome_names,
            weights,
            clusters,
        };
        obs.validate()?;
        Ok(obs)
    }

    pub fn with_weights(self, values: Vec<f64>, kind: WeightKind) -> Result<Self> {
        let ObservationSet {
            features,
            feature_names,
            outcomes,
            outcome_names,
            clusters,
            ..
        } = self;
        Self::from_parts(
            features,
            feature_names,
            outcomes,
            outcome_names,
            Some(Weights { values, kind }),
            clusters,
        )
    }

    pub fn with_clusters(self, clusters: ClusterLabels) -> Result<Self> {
        let ObservationSet {
            features,
            feature_names,
            outcomes,
            outcome_names,
            weights,
            ..
        } = self;
        Self::from_parts(
            features,
            feature_names,
            outcomes,
            outcome_names,
            weights,
            Some(clusters),
        )
    }

    /// Checks every invariant of the type.
    pub fn validate(&self) -> Result<()> {
        let n = self.features.nrows();
        if self.feature_names.len() != self.features.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature names for {} feature columns",
                self.feature_names.len(),
                self.features.ncols()
            )));
        }
        if self.outcome_names.len() != self.outcomes.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} outcome names for {} outcome columns",
                self.outcome_names.len(),
                self.outcomes.ncols()
            )));
        }
        if self.outcomes.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "features have {n} rows but outcomes have {}",
                self.outcomes.nrows()
            )));
        }
        check_finite(&self.features, &self.feature_names)?;
        check_finite(&self.outcomes, &self.outcome_names)?;
        if let Some(w) = &self.weights {
            if w.values.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} weights for {n} rows",
                    w.values.len()
                )));
            }
            for (row, &value) in w.values.iter().enumerate() {
                if value.is_nan() {
                    return Err(Error::MissingValue {
                        row,
                        column: "weight".into(),
                    });
                }
                if !value.is_finite() || value <= 0.0 {
                    return Err(Error::NonPositiveWeight { row, value });
                }
                if w.kind == WeightKind::Frequency && value.fract() != 0.0 {
                    return Err(Error::NonIntegerFrequencyWeight { row, value });
                }
            }
        }
        if let Some(c) = &self.clusters {
            if c.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} cluster labels for {n} rows",
                    c.len()
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn o(&self) -> usize {
        self.outcomes.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn outcomes(&self) -> &DMatrix<f64> {
        &self.outcomes
    }

    pub fn outcome_names(&self) -> &[String] {
        &self.outcome_names
    }

    pub fn weights(&self) -> Option<&Weights> {
        self.weights.as_ref()
    }

    pub fn clusters(&self) -> Option<&ClusterLabels> {
        self.clusters.as_ref()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    }

    /// Prepends a constant column named `intercept`.
    pub fn with_intercept(&self) -> Self {
        let n = self.n();
        let features = self.features.clone().insert_column(0, 1.0);
        let mut feature_names = Vec::with_capacity(self.p() + 1);
        feature_names.push("intercept".to_owned());
        feature_names.extend(self.feature_names.iter().cloned());
        debug_assert_eq!(features.nrows(), n);
        ObservationSet {
            features,
            feature_names,
            ..self.clone()
        }
    }

    /// Replaces the feature block, keeping outcomes, weights and clusters.
    pub fn with_features(&self, features: DMatrix<f64>, feature_names: Vec<String>) -> Result<Self> {
        Self::from_parts(
            features,
            feature_names,
            self.outcomes.clone(),
            self.outcome_names.clone(),
            self.weights.clone(),
            self.clusters.clone(),
        )
    }

    /// Keeps only the listed outcome columns, in the given order.
    pub fn select_outcomes(&self, names: &[&str]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|name| {
                self.outcome_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::MissingColumn((*name).to_owned()))
            })
            .collect::<Result<Vec<_>>>()?;
        let outcomes = self.outcomes.select_columns(&idx);
        Ok(ObservationSet {
            outcomes,
            outcome_names: names.iter().map(|s| (*s).to_owned()).collect(),
            ..self.clone()
        })
    }

    /// Subset of rows in the given order. Cluster labels are re-interned.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let clusters = self
            .clusters
            .as_ref()
            .map(|c| ClusterLabels::from_labels(rows.iter().map(|&r| c.label_of_row(r))));
        ObservationSet {
            features: self.features.select_rows(rows),
            feature_names: self.feature_names.clone(),
            outcomes: self.outcomes.select_rows(rows),
            outcome_names: self.outcome_names.clone(),
            weights: self.weights.as_ref().map(|w| Weights {
                values: rows.iter().map(|&r| w.values[r]).collect(),
                kind: w.kind,
            }),
            clusters,
        }
    }

    /// Row-wise concatenation of two sets with identical schemas.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.feature_names != other.feature_names || self.outcome_names != other.outcome_names {
            return Err(Error::SchemaMismatch("column names differ".into()));
        }
        let (n1, n2) = (self.n(), other.n());
        let mut features = DMatrix::zeros(n1 + n2, self.p());
        features.rows_mut(0, n1).copy_from(&self.features);
        features.rows_mut(n1, n2).copy_from(&other.features);
        let mut outcomes = DMatrix::zeros(n1 + n2, self.o());
        outcomes.rows_mut(0, n1).copy_from(&self.outcomes);
        outcomes.rows_mut(n1, n2).copy_from(&other.outcomes);
        let weights = match (&self.weights, &other.weights) {
            (None, None) => None,
            (Some(a), Some(b)) if a.kind == b.kind => Some(Weights {
                values: a.values.iter().chain(&b.values).copied().collect(),
                kind: a.kind,
            }),
            _ => return Err(Error::SchemaMismatch("weight presence or kind differs".into())),
        };
        let clusters = match (&self.clusters, &other.clusters) {
            (None, None) => None,
            (Some(a), Some(b)) => Some(ClusterLabels::from_labels(
                (0..n1)
                    .map(|r| a.label_of_row(r))
                    .chain((0..n2).map(|r| b.label_of_row(r))),
            )),
            _ => return Err(Error::SchemaMismatch("cluster presence differs".into())),
        };
        Self::from_parts(
            features,
            self.feature_names.clone(),
            outcomes,
            self.outcome_names.clone(),
            weights,
            clusters,
        )
    }
}

fn check_finite(m: &DMatrix<f64>, names: &[String]) -> Result<()> {
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            if !m[(row, col)].is_finite() {
                return Err(Error::MissingValue {
                    row,
                    column: names[col].clone(),
                });
            }
        }
    }
    Ok(())
}

/// Free-function form of [`ObservationSet::validate`].
pub fn validate(obs: &ObservationSet) -> Result<()> {
    obs.validate()
}

/// Which compression produced a [`SuffStatsTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Grouped on features; carries sums, sums of squares and counts.
    SufficientStatistics,
    /// Grouped on features and outcomes jointly.
    FrequencyWeights,
    /// Grouped on features; sums and counts only (variance is lost).
    GroupMeans,
}

/// Per-group sums over observation weights `w` and `w²`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSums {
    pub kind: WeightKind,
    /// Σw per group.
    pub w_sum: DVector<f64>,
    /// Σw² per group.
    pub w2_sum: DVector<f64>,
    /// Σ w·y, G×o.
    pub wy_sum: DMatrix<f64>,
    /// Σ w·y², G×o.
    pub wy_sq_sum: DMatrix<f64>,
    /// Σ w²·y, G×o.
    pub w2y_sum: DMatrix<f64>,
    /// Σ w²·y², G×o.
    pub w2y_sq_sum: DMatrix<f64>,
}

/// Conditionally sufficient statistics: one row per distinct feature vector
/// (optionally extended by the cluster label).
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStatsTable {
    pub(crate) kind: TableKind,
    pub(crate) feature_names: Vec<String>,
    pub(crate) outcome_names: Vec<String>,
    pub(crate) features: DMatrix<f64>,
    pub(crate) y_sum: DMatrix<f64>,
    pub(crate) y_sq_sum: Option<DMatrix<f64>>,
    pub(crate) count: Vec<u64>,
    pub(crate) clusters: Option<Vec<String>>,
    pub(crate) weighted: Option<WeightedSums>,
}

impl SuffStatsTable {
    /// Assembles a table from stored columns, checking shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        kind: TableKind,
        feature_names: Vec<String>,
        outcome_names: Vec<String>,
        features: DMatrix<f64>,
        y_sum: DMatrix<f64>,
        y_sq_sum: Option<DMatrix<f64>>,
        count: Vec<u64>,
        clusters: Option<Vec<String>>,
        weighted: Option<WeightedSums>,
    ) -> Result<Self> {
        let g = features.nrows();
        let o = outcome_names.len();
        let shape_ok = |m: &DMatrix<f64>| m.nrows() == g && m.ncols() == o;
        if features.ncols() != feature_names.len() {
            return Err(Error::DimensionMismatch("feature names vs columns".into()));
        }
        if !shape_ok(&y_sum) || y_sq_sum.as_ref().is_some_and(|m| !shape_ok(m)) {
            return Err(Error::DimensionMismatch("outcome sums must be G×o".into()));
        }
        if count.len() != g || clusters.as_ref().is_some_and(|c| c.len() != g) {
            return Err(Error::DimensionMismatch("per-group columns must have length G".into()));
        }
        if count.contains(&0) {
            return Err(Error::InvalidArgument("group counts must be positive".into()));
        }
        if let Some(w) = &weighted {
            let ok = w.w_sum.len() == g
                && w.w2_sum.len() == g
                && [&w.wy_sum, &w.wy_sq_sum, &w.w2y_sum, &w.w2y_sq_sum]
                    .iter()
                    .all(|m| shape_ok(m));
            if !ok {
                return Err(Error::DimensionMismatch("weighted blocks must be G×o".into()));
            }
        }
        if kind == TableKind::GroupMeans && y_sq_sum.is_some() {
            return Err(Error::SchemaMismatch("group-means tables carry no sums of squares".into()));
        }
        if kind != TableKind::GroupMeans && y_sq_sum.is_none() {
            return Err(Error::SchemaMismatch("sums of squares are required".into()));
        }
        Ok(SuffStatsTable {
            kind,
            feature_names,
            outcome_names,
            features,
            y_sum,
            y_sq_sum,
            count,
            clusters,
            weighted,
        })
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    /// Number of compressed records G.
    pub fn num_groups(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn o(&self) -> usize {
        self.outcome_names.len()
    }

    /// Σñ, the number of source rows.
    pub fn num_observations(&self) -> u64 {
        self.count.iter().sum()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn outcome_names(&self) -> &[String] {
        &self.outcome_names
    }

    /// Distinct feature rows M̃ (G×p).
    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// ỹ′ (G×o).
    pub fn y_sum(&self) -> &DMatrix<f64> {
        &self.y_sum
    }

    /// ỹ″ (G×o). Group-means tables do not have it.
    pub fn y_sq_sum(&self) -> Result<&DMatrix<f64>> {
        self.y_sq_sum
            .as_ref()
            .ok_or(Error::UnavailableStatistic("sum of squares"))
    }

    /// ñ.
    pub fn count(&self) -> &[u64] {
        &self.count
    }

    pub fn clusters(&self) -> Option<&[String]> {
        self.clusters.as_deref()
    }

    pub fn weighted(&self) -> Option<&WeightedSums> {
        self.weighted.as_ref()
    }

    /// Number of distinct cluster labels, when the table is cluster-keyed.
    pub fn num_clusters(&self) -> Option<usize> {
        self.clusters.as_ref().map(|c| {
            let mut labels: Vec<&str> = c.iter().map(String::as_str).collect();
            labels.sort_unstable();
            labels.dedup();
            labels.len()
        })
    }

    /// Prepends a constant `intercept` column. Group order is unchanged.
    pub fn with_intercept(&self) -> Self {
        let mut feature_names = Vec::with_capacity(self.p() + 1);
        feature_names.push("intercept".to_owned());
        feature_names.extend(self.feature_names.iter().cloned());
        SuffStatsTable {
            features: self.features.clone().insert_column(0, 1.0),
            feature_names,
            ..self.clone()
        }
    }
}

/// One group of clusters sharing an identical ordered feature block.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGroup {
    /// Shared feature block M̃_g (T_g×p).
    pub features: DMatrix<f64>,
    /// Σ_c y_c, T_g×o.
    pub y_sum: DMatrix<f64>,
    /// Σ_c y_c y_cᵀ per outcome, each T_g×T_g.
    pub y_outer_sum: Vec<DMatrix<f64>>,
    /// Number of clusters n_g in the group.
    pub count: u64,
}

/// Between-cluster compression: clusters grouped by identical feature block.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStatsTable {
    pub(crate) feature_names: Vec<String>,
    pub(crate) outcome_names: Vec<String>,
    pub(crate) groups: Vec<ClusterGroup>,
}

impl ClusterStatsTable {
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn outcome_names(&self) -> &[String] {
        &self.outcome_names
    }

    pub fn groups(&self) -> &[ClusterGroup] {
        &self.groups
    }

    pub fn p(&self) -> usize {
        self.feature_names.len()
    }

    pub fn o(&self) -> usize {
        self.outcome_names.len()
    }

    /// Σ n_g, the number of source clusters.
    pub fn num_clusters(&self) -> u64 {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// Σ n_g·T_g, the number of source rows.
    pub fn num_observations(&self) -> u64 {
        self.groups
            .iter()
            .map(|g| g.count * g.features.nrows() as u64)
            .sum()
    }
}

/// Dynamic-feature blocks of a [`PanelStatsTable`].
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicBlocks {
    PerCluster {
        /// M₂ᵀW_C, p₂×C.
        col_sums: DMatrix<f64>,
        /// M₂,cᵀM₂,c per cluster.
        gram: Vec<DMatrix<f64>>,
    },
    Balanced(BalancedPanel),
}

/// Shared structure of a balanced panel: every cluster has the same ordered
/// dynamic block.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedPanel {
    pub periods: usize,
    /// M̃₂ (T×p₂).
    pub block: DMatrix<f64>,
    /// M̃₂ᵀ1_T.
    pub col_sum: DVector<f64>,
    /// M̃₂ᵀM̃₂.
    pub gram: DMatrix<f64>,
    /// Matrix(y, T, C) per outcome.
    pub y_matrix: Vec<DMatrix<f64>>,
}

/// Static/dynamic split compression: one static row per cluster plus the
/// cluster-level dynamic aggregates.
///
/// The design implied by the table is `[M₁ | M₂ | M₃]` where `M₃` interacts the
/// static columns listed in `interactions` with every dynamic column
/// (static-major order).
#[derive(Debug, Clone, PartialEq)]
pub struct PanelStatsTable {
    pub(crate) static_names: Vec<String>,
    pub(crate) dynamic_names: Vec<String>,
    pub(crate) interactions: Vec<usize>,
    pub(crate) outcome_names: Vec<String>,
    pub(crate) cluster_labels: Vec<String>,
    /// M̃₁, C×p₁.
    pub(crate) static_features: DMatrix<f64>,
    /// n_c.
    pub(crate) cluster_size: Vec<u64>,
    /// ỹ′ per cluster, C×o.
    pub(crate) y_sum: DMatrix<f64>,
    /// M₂ᵀdiag(y)W_C per outcome, p₂×C.
    pub(crate) y_weighted: Vec<DMatrix<f64>>,
    pub(crate) dynamic: DynamicBlocks,
}

impl PanelStatsTable {
    pub fn num_clusters(&self) -> usize {
        self.static_features.nrows()
    }

    pub fn num_observations(&self) -> u64 {
        self.cluster_size.iter().sum()
    }

    pub fn static_names(&self) -> &[String] {
        &self.static_names
    }

    pub fn dynamic_names(&self) -> &[String] {
        &self.dynamic_names
    }

    pub fn interactions(&self) -> &[usize] {
        &self.interactions
    }

    pub fn outcome_names(&self) -> &[String] {
        &self.outcome_names
    }

    pub fn cluster_labels(&self) -> &[String] {
        &self.cluster_labels
    }

    pub fn static_features(&self) -> &DMatrix<f64> {
        &self.static_features
    }

    pub fn cluster_size(&self) -> &[u64] {
        &self.cluster_size
    }

    pub fn y_sum(&self) -> &DMatrix<f64> {
        &self.y_sum
    }

    pub fn y_weighted(&self) -> &[DMatrix<f64>] {
        &self.y_weighted
    }

    pub fn dynamic(&self) -> &DynamicBlocks {
        &self.dynamic
    }

    pub fn is_balanced(&self) -> bool {
        matches!(self.dynamic, DynamicBlocks::Balanced(_))
    }

    pub fn p_static(&self) -> usize {
        self.static_names.len()
    }

    pub fn p_dynamic(&self) -> usize {
        self.dynamic_names.len()
    }

    /// Total number of model columns p₁ + p₂ + q·p₂.
    pub fn p(&self) -> usize {
        self.p_static() + self.p_dynamic() * (1 + self.interactions.len())
    }

    pub fn o(&self) -> usize {
        self.outcome_names.len()
    }

    /// Column names of the implied design `[M₁ | M₂ | M₃]`.
    pub fn design_names(&self) -> Vec<String> {
        let mut names = self.static_names.clone();
        names.extend(self.dynamic_names.iter().cloned());
        for &s in &self.interactions {
            for d in &self.dynamic_names {
                names.push(format!("{}:{}", self.static_names[s], d));
            }
        }
        names
    }

    /// Approximate heap footprint of the stored statistics, in bytes.
    pub fn size_bytes(&self) -> usize {
        let f = std::mem::size_of::<f64>();
        let mut total = self.static_features.len() * f
            + self.cluster_size.len() * 8
            + self.y_sum.len() * f
            + self.y_weighted.iter().map(|m| m.len() * f).sum::<usize>()
            + self.cluster_labels.iter().map(|l| l.len() + 24).sum::<usize>();
        total += match &self.dynamic {
            DynamicBlocks::PerCluster { col_sums, gram } => {
                col_sums.len() * f + gram.iter().map(|g| g.len() * f).sum::<usize>()
            }
            DynamicBlocks::Balanced(b) => {
                (b.block.len() + b.col_sum.len() + b.gram.len()) * f
                    + b.y_matrix.iter().map(|m| m.len() * f).sum::<usize>()
            }
        };
        total
    }
}

/// How clustered covariances are computed from compressed data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClusterStrategy {
    WithinCluster,
    BetweenCluster,
    StaticDynamic,
    BalancedPanel,
}

/// The error covariance structure Ω assumed by the sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovarianceSpec {
    Homoskedastic,
    HeteroskedasticEhw,
    ClusterRobust(ClusterStrategy),
}

impl CovarianceSpec {
    pub fn requires_clusters(self) -> bool {
        matches!(self, CovarianceSpec::ClusterRobust(_))
    }
}

impl fmt::Display for CovarianceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CovarianceSpec::Homoskedastic => "ols",
            CovarianceSpec::HeteroskedasticEhw => "hc",
            CovarianceSpec::ClusterRobust(ClusterStrategy::WithinCluster) => "cluster:within",
            CovarianceSpec::ClusterRobust(ClusterStrategy::BetweenCluster) => "cluster:between",
            CovarianceSpec::ClusterRobust(ClusterStrategy::StaticDynamic) => "cluster:static-dynamic",
            CovarianceSpec::ClusterRobust(ClusterStrategy::BalancedPanel) => "cluster:balanced",
        };
        f.write_str(s)
    }
}

/// Covariance matrices of a fit, or the marker that the representation could
/// not recover them.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    /// One p×p matrix per outcome.
    Available(Vec<DMatrix<f64>>),
    /// The input discarded the statistics the covariance needs.
    Lossy,
}

impl Covariance {
    pub fn matrices(&self) -> Option<&[DMatrix<f64>]> {
        match self {
            Covariance::Available(m) => Some(m),
            Covariance::Lossy => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Uncompressed sample size.
    pub n: u64,
    /// Compressed records actually used by the estimator.
    pub groups: usize,
    pub clusters: Option<usize>,
    /// n / G.
    pub compression_ratio: f64,
    /// `None` for the logistic information-matrix covariance.
    pub covariance_spec: Option<CovarianceSpec>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub feature_names: Vec<String>,
    pub outcome_names: Vec<String>,
    /// p×o.
    pub beta: DMatrix<f64>,
    pub covariance: Covariance,
    /// Dispersion per outcome; homoskedastic fits only.
    pub sigma2: Option<Vec<f64>>,
    pub df_residual: f64,
    pub diagnostics: Diagnostics,
}

impl FitResult {
    pub fn coefficients(&self, outcome: usize) -> Vec<f64> {
        self.beta.column(outcome).iter().copied().collect()
    }

    /// Square roots of the covariance diagonal, per outcome.
    pub fn std_errors(&self) -> Option<Vec<Vec<f64>>> {
        self.covariance.matrices().map(|ms| {
            ms.iter()
                .map(|m| m.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect())
                .collect()
        })
    }
}
