//! Weighted least squares and sandwich covariances on compressed data.
//!
//! Every path computes V = Π Ξ Π with the bread Π from the compressed gram
//! and a meat Ξ that matches its row-level definition exactly. No
//! small-sample corrections are applied.

mod between;
mod panel;
mod wls;

use nalgebra::DMatrix;

pub use between::{bread_between, meat_cluster_between};
pub use panel::{meat_balanced_panel, meat_cluster_static_dynamic};
pub use wls::{
    bread, meat_cluster_within, meat_ehw, meat_homoskedastic, rss_compressed, solve_wls, BreadMatrix,
    MeatMatrix,
};

use crate::error::{Error, Result};
use crate::linalg::sandwich;
use crate::model::{
    ClusterStatsTable, ClusterStrategy, Covariance, CovarianceSpec, Diagnostics, FitResult, PanelStatsTable,
    SuffStatsTable,
};

/// A compressed representation accepted by [`fit`].
#[derive(Debug, Clone, Copy)]
pub enum CompressedData<'a> {
    SuffStats(&'a SuffStatsTable),
    Clusters(&'a ClusterStatsTable),
    Panel(&'a PanelStatsTable),
}

impl<'a> From<&'a SuffStatsTable> for CompressedData<'a> {
    fn from(t: &'a SuffStatsTable) -> Self {
        CompressedData::SuffStats(t)
    }
}

impl<'a> From<&'a ClusterStatsTable> for CompressedData<'a> {
    fn from(t: &'a ClusterStatsTable) -> Self {
        CompressedData::Clusters(t)
    }
}

impl<'a> From<&'a PanelStatsTable> for CompressedData<'a> {
    fn from(t: &'a PanelStatsTable) -> Self {
        CompressedData::Panel(t)
    }
}

/// Coefficients from the bread alone, for callers that need no covariance.
pub fn coefficients<'a>(input: impl Into<CompressedData<'a>>) -> Result<DMatrix<f64>> {
    match input.into() {
        CompressedData::SuffStats(t) => solve_wls(t),
        CompressedData::Clusters(t) => {
            let (gram, rhs) = between::normal_equations(t);
            Ok(BreadMatrix::from_gram(gram, &t.feature_names)?.solve(&rhs))
        }
        CompressedData::Panel(t) => {
            let (gram, rhs) = panel::normal_equations_static_dynamic(t);
            Ok(BreadMatrix::from_gram(gram, &t.design_names())?.solve(&rhs))
        }
    }
}

/// Bread, coefficients and meat: everything [`fit`] computes before the
/// sandwich product.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub bread: BreadMatrix,
    pub beta: DMatrix<f64>,
    /// `None` when the representation cannot support a covariance.
    pub meat: Option<MeatMatrix>,
    pub sigma2: Option<Vec<f64>>,
}

/// Runs the estimator stage for `spec` on a compressed representation.
pub fn estimate<'a>(input: impl Into<CompressedData<'a>>, spec: CovarianceSpec) -> Result<Estimate> {
    match input.into() {
        CompressedData::SuffStats(t) => estimate_suffstats(t, spec),
        CompressedData::Clusters(t) => estimate_between(t, spec),
        CompressedData::Panel(t) => estimate_panel(t, spec),
    }
}

/// Bread, coefficients, meat and sandwich for the requested covariance.
pub fn fit<'a>(input: impl Into<CompressedData<'a>>, spec: CovarianceSpec) -> Result<FitResult> {
    let input = input.into();
    let est = estimate(input, spec)?;
    let covariance = match &est.meat {
        Some(meat) => Covariance::Available(meat.xi.iter().map(|xi| sandwich(&est.bread.pi, xi)).collect()),
        None => Covariance::Lossy,
    };
    let (feature_names, outcome_names, n, groups, clusters, df) = match input {
        CompressedData::SuffStats(t) => (
            t.feature_names.clone(),
            t.outcome_names.clone(),
            t.num_observations(),
            t.num_groups(),
            t.num_clusters(),
            wls::residual_df(t).1,
        ),
        CompressedData::Clusters(t) => (
            t.feature_names.clone(),
            t.outcome_names.clone(),
            t.num_observations(),
            t.groups.len(),
            Some(t.num_clusters() as usize),
            t.num_observations() as f64 - t.p() as f64,
        ),
        CompressedData::Panel(t) => (
            t.design_names(),
            t.outcome_names.clone(),
            t.num_observations(),
            t.num_clusters(),
            Some(t.num_clusters()),
            t.num_observations() as f64 - t.p() as f64,
        ),
    };
    Ok(FitResult {
        feature_names,
        outcome_names,
        beta: est.beta,
        covariance,
        sigma2: est.sigma2,
        df_residual: df,
        diagnostics: Diagnostics {
            n,
            groups,
            clusters,
            compression_ratio: n as f64 / groups as f64,
            covariance_spec: Some(spec),
            converged: None,
            iterations: None,
        },
    })
}

fn estimate_suffstats(t: &SuffStatsTable, spec: CovarianceSpec) -> Result<Estimate> {
    let b = bread(t)?;
    let beta = wls::solve_with(&b, t);
    let mut sigma2 = None;
    let meat = match spec {
        _ if wls::is_lossy(t) && !spec.requires_clusters() => None,
        CovarianceSpec::Homoskedastic => {
            sigma2 = Some(rss_compressed(t, &beta)?.1);
            Some(meat_homoskedastic(t, &beta)?)
        }
        CovarianceSpec::HeteroskedasticEhw => Some(meat_ehw(t, &beta)?),
        CovarianceSpec::ClusterRobust(ClusterStrategy::WithinCluster) => Some(meat_cluster_within(t, &beta)?),
        CovarianceSpec::ClusterRobust(_) => {
            return Err(Error::RepresentationMismatch(format!(
                "{spec} needs a cluster or panel table, got a sufficient-statistics table"
            )))
        }
    };
    Ok(Estimate {
        bread: b,
        beta,
        meat,
        sigma2,
    })
}

fn estimate_between(t: &ClusterStatsTable, spec: CovarianceSpec) -> Result<Estimate> {
    if spec != CovarianceSpec::ClusterRobust(ClusterStrategy::BetweenCluster) {
        return Err(Error::RepresentationMismatch(format!(
            "a between-cluster table supports only cluster:between, not {spec}"
        )));
    }
    if t.groups.is_empty() {
        return Err(Error::InvalidArgument("between-cluster table is empty".into()));
    }
    let (gram, rhs) = between::normal_equations(t);
    let b = BreadMatrix::from_gram(gram, &t.feature_names)?;
    let beta = b.solve(&rhs);
    let meat = meat_cluster_between(t, &beta)?;
    Ok(Estimate {
        bread: b,
        beta,
        meat: Some(meat),
        sigma2: None,
    })
}

fn estimate_panel(t: &PanelStatsTable, spec: CovarianceSpec) -> Result<Estimate> {
    let names = t.design_names();
    let (gram, rhs) = match spec {
        CovarianceSpec::ClusterRobust(ClusterStrategy::StaticDynamic) => panel::normal_equations_static_dynamic(t),
        CovarianceSpec::ClusterRobust(ClusterStrategy::BalancedPanel) => panel::normal_equations_balanced(t)?,
        other => {
            return Err(Error::RepresentationMismatch(format!(
                "a panel table supports cluster:static-dynamic and cluster:balanced, not {other}"
            )))
        }
    };
    let b = BreadMatrix::from_gram(gram, &names)?;
    let beta = b.solve(&rhs);
    let meat = if spec == CovarianceSpec::ClusterRobust(ClusterStrategy::BalancedPanel) {
        meat_balanced_panel(t, &beta)?
    } else {
        meat_cluster_static_dynamic(t, &beta)?
    };
    Ok(Estimate {
        bread: b,
        beta,
        meat: Some(meat),
        sigma2: None,
    })
}
