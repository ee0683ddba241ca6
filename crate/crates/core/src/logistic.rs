//! Logistic regression on per-group success counts.

use nalgebra::{DMatrix, DVector};

use crate::compress::compress_group_means;
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, SpdFactor};
use crate::model::{Covariance, Diagnostics, FitResult, ObservationSet};

/// Unique feature rows with successes and trials per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticSuffStats {
    feature_names: Vec<String>,
    outcome_name: String,
    features: DMatrix<f64>,
    successes: DVector<f64>,
    count: Vec<u64>,
}

impl LogisticSuffStats {
    pub fn from_parts(
        feature_names: Vec<String>,
        outcome_name: String,
        features: DMatrix<f64>,
        successes: DVector<f64>,
        count: Vec<u64>,
    ) -> Result<Self> {
        let g = features.nrows();
        if features.ncols() != feature_names.len() || successes.len() != g || count.len() != g {
            return Err(Error::DimensionMismatch(format!(
                "{g} groups with {} feature names, {} success counts and {} trial counts",
                feature_names.len(),
                successes.len(),
                count.len()
            )));
        }
        for (row, (&y, &n)) in successes.iter().zip(&count).enumerate() {
            if !(0.0..=n as f64).contains(&y) {
                return Err(Error::NonBinaryOutcome { row, value: y });
            }
        }
        Ok(LogisticSuffStats {
            feature_names,
            outcome_name,
            features,
            successes,
            count,
        })
    }

    pub fn num_groups(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_observations(&self) -> u64 {
        self.count.iter().sum()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn successes(&self) -> &DVector<f64> {
        &self.successes
    }

    pub fn count(&self) -> &[u64] {
        &self.count
    }
}

/// Groups rows by feature vector, keeping successes and trials. The sum of
/// squares is redundant for a 0/1 outcome and is not stored.
pub fn compress_logistic(obs: &ObservationSet) -> Result<LogisticSuffStats> {
    if obs.o() != 1 {
        return Err(Error::InvalidArgument(format!(
            "logistic regression takes one outcome, got {}",
            obs.o()
        )));
    }
    if obs.weights().is_some() {
        return Err(Error::Unsupported("weights with logistic regression".into()));
    }
    for (row, &v) in obs.outcomes().column(0).iter().enumerate() {
        if v != 0.0 && v != 1.0 {
            return Err(Error::NonBinaryOutcome { row, value: v });
        }
    }
    let t = compress_group_means(obs)?;
    LogisticSuffStats::from_parts(
        t.feature_names().to_vec(),
        t.outcome_names()[0].clone(),
        t.features().clone(),
        t.y_sum().column(0).into_owned(),
        t.count().to_vec(),
    )
}

/// log(1 + eᶻ) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_beta(stats: &LogisticSuffStats, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != stats.p() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} features",
            beta.len(),
            stats.p()
        )));
    }
    Ok(())
}

/// Σ_g ỹ′ log s(z) + (ñ − ỹ′) log(1 − s(z)) with z = m̃ᵀβ.
pub fn loglik(stats: &LogisticSuffStats, beta: &DVector<f64>) -> Result<f64> {
    check_beta(stats, beta)?;
    let z = &stats.features * beta;
    Ok(z.iter()
        .zip(stats.successes.iter())
        .zip(&stats.count)
        .map(|((&z, &y), &n)| -y * softplus(-z) - (n as f64 - y) * softplus(z))
        .sum())
}

/// M̃ᵀ(ỹ′ − ñ s(M̃β)).
pub fn gradient(stats: &LogisticSuffStats, beta: &DVector<f64>) -> Result<DVector<f64>> {
    check_beta(stats, beta)?;
    let z = &stats.features * beta;
    let r = DVector::from_fn(z.len(), |g, _| stats.successes[g] - stats.count[g] as f64 * sigmoid(z[g]));
    Ok(stats.features.tr_mul(&r))
}

/// M̃ᵀ diag(ñ s (1 − s)) M̃, the negated Hessian.
fn information(stats: &LogisticSuffStats, beta: &DVector<f64>) -> DMatrix<f64> {
    let z = &stats.features * beta;
    let m = &stats.features;
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |g, j| {
        let s = sigmoid(z[g]);
        stats.count[g] as f64 * s * (1.0 - s) * m[(g, j)]
    });
    symmetrize(&m.tr_mul(&scaled))
}

/// −M̃ᵀ diag(ñ s (1 − s)) M̃.
pub fn hessian(stats: &LogisticSuffStats, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_beta(stats, beta)?;
    Ok(-information(stats, beta))
}

#[derive(Debug, Clone, Copy)]
pub struct LogisticOptions {
    /// Gradient tolerance per observation: the fit stops once
    /// max|∇l| < tol·max(1, n) and the Newton step has vanished.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

/// Newton–Raphson from β = 0 with step halving whenever the likelihood
/// would decrease.
///
/// Separated data drives β off to infinity with steps that do not shrink, so
/// the vanishing-step requirement turns it into [`Error::DidNotConverge`]
/// even once the gradient is numerically zero.
pub fn fit_logistic(stats: &LogisticSuffStats, options: LogisticOptions) -> Result<FitResult> {
    let p = stats.p();
    let n = stats.num_observations();
    let grad_tol = options.tol * (n as f64).max(1.0);
    let mut beta = DVector::zeros(p);
    let mut ll = loglik(stats, &beta)?;
    for iter in 0..options.max_iter {
        let grad = gradient(stats, &beta)?;
        let info = information(stats, &beta);
        let factor = match SpdFactor::new(&info, &stats.feature_names) {
            Ok(f) => f,
            // at β = 0 every weight is ñ/4, so failure means collinear features
            Err(e) if iter == 0 => return Err(e),
            Err(_) => return Err(Error::DidNotConverge { iterations: iter }),
        };
        let step = factor.solve(&DMatrix::from_column_slice(p, 1, grad.as_slice()));
        let step = DVector::from_column_slice(step.as_slice());
        let grad_small = grad.amax() < grad_tol;
        let step_small = step.amax() <= 1e-8 * (1.0 + beta.amax());
        if grad_small && step_small {
            return Ok(result(stats, beta, factor.inverse(), iter));
        }
        // once the predicted gain is below the rounding noise of the
        // likelihood, comparisons are meaningless and the full step is taken
        let noise = 64.0 * f64::EPSILON * (1.0 + ll.abs());
        let negligible = grad.dot(&step) <= noise;
        let mut t = 1.0;
        loop {
            let candidate = &beta + &step * t;
            let cand_ll = loglik(stats, &candidate)?;
            if negligible || cand_ll >= ll || t < 1e-10 {
                beta = candidate;
                ll = cand_ll;
                break;
            }
            t *= 0.5;
        }
    }
    Err(Error::DidNotConverge {
        iterations: options.max_iter,
    })
}

fn result(stats: &LogisticSuffStats, beta: DVector<f64>, cov: DMatrix<f64>, iterations: usize) -> FitResult {
    let n = stats.num_observations();
    let g = stats.num_groups();
    FitResult {
        feature_names: stats.feature_names.clone(),
        outcome_names: vec![stats.outcome_name.clone()],
        beta: DMatrix::from_column_slice(beta.len(), 1, beta.as_slice()),
        covariance: Covariance::Available(vec![cov]),
        sigma2: None,
        df_residual: n as f64 - stats.p() as f64,
        diagnostics: Diagnostics {
            n,
            groups: g,
            clusters: None,
            compression_ratio: n as f64 / g as f64,
            covariance_spec: None,
            converged: Some(true),
            iterations: Some(iterations),
        },
    }
}
