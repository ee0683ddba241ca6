use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{symmetrize, SpdFactor};
use crate::model::{CovarianceSpec, ClusterStrategy, SuffStatsTable, TableKind, WeightKind};

/// Inverted gram matrix Π together with the gram it came from.
#[derive(Debug, Clone)]
pub struct BreadMatrix {
    pub pi: DMatrix<f64>,
    pub gram: DMatrix<f64>,
    /// Smallest Cholesky pivot relative to the largest gram diagonal.
    pub min_pivot_ratio: f64,
    factor: SpdFactor,
}

impl BreadMatrix {
    pub(crate) fn from_gram(gram: DMatrix<f64>, names: &[String]) -> Result<Self> {
        let gram = symmetrize(&gram);
        let factor = SpdFactor::new(&gram, names)?;
        Ok(BreadMatrix {
            pi: factor.inverse(),
            min_pivot_ratio: factor.min_pivot_ratio(),
            gram,
            factor,
        })
    }

    /// Solves `gram · β = rhs`, one column per outcome.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.factor.solve(rhs)
    }
}

/// Meat Ξ per outcome and the covariance structure that produced it.
#[derive(Debug, Clone)]
pub struct MeatMatrix {
    pub xi: Vec<DMatrix<f64>>,
    pub spec: CovarianceSpec,
}

/// Per-group weights of the bread: ñ, or Σw for weighted tables.
fn group_weights(stats: &SuffStatsTable) -> Vec<f64> {
    match &stats.weighted {
        Some(w) => w.w_sum.iter().copied().collect(),
        None => stats.count.iter().map(|&c| c as f64).collect(),
    }
}

/// M̃ᵀ diag(d) M̃.
pub(crate) fn weighted_gram(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)]);
    symmetrize(&(m.transpose() * scaled))
}

/// Π = (M̃ᵀ diag(ñ) M̃)⁻¹, with Σw in place of ñ for weighted tables.
pub fn bread(stats: &SuffStatsTable) -> Result<BreadMatrix> {
    let gram = weighted_gram(&stats.features, &group_weights(stats));
    BreadMatrix::from_gram(gram, &stats.feature_names)
}

/// Right-hand side M̃ᵀỹ′ (or M̃ᵀỹ′(w)).
fn moment(stats: &SuffStatsTable) -> DMatrix<f64> {
    let y = match &stats.weighted {
        Some(w) => &w.wy_sum,
        None => &stats.y_sum,
    };
    stats.features.transpose() * y
}

/// β̂ = Π M̃ᵀỹ′ for every outcome at once.
pub fn solve_wls(stats: &SuffStatsTable) -> Result<DMatrix<f64>> {
    Ok(bread(stats)?.solve(&moment(stats)))
}

pub(crate) fn solve_with(bread: &BreadMatrix, stats: &SuffStatsTable) -> DMatrix<f64> {
    bread.solve(&moment(stats))
}

fn check_beta(stats: &SuffStatsTable, beta: &DMatrix<f64>) -> Result<()> {
    if beta.nrows() != stats.p() || beta.ncols() != stats.o() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients are {}×{}, expected {}×{}",
            beta.nrows(),
            beta.ncols(),
            stats.p(),
            stats.o()
        )));
    }
    Ok(())
}

/// Which weight power the per-group residual sums use.
#[derive(Clone, Copy)]
enum Power {
    /// Σ w·e² (or Σ e² unweighted): the dispersion.
    One,
    /// Σ w²·e²: the heteroskedastic meat.
    Two,
}

/// Per-group residual sums of squares, G×o:
/// ŷ²·ñ − 2ŷ·ỹ′ + ỹ″ and its weighted analogues.
fn group_residual_ss(stats: &SuffStatsTable, beta: &DMatrix<f64>, power: Power) -> Result<DMatrix<f64>> {
    check_beta(stats, beta)?;
    let y_sq = stats.y_sq_sum()?;
    let fitted = &stats.features * beta;
    let (g, o) = (stats.num_groups(), stats.o());
    let mut out = DMatrix::zeros(g, o);
    for k in 0..o {
        for i in 0..g {
            let yh = fitted[(i, k)];
            let (w, s1, s2) = match (&stats.weighted, power) {
                (None, _) => (stats.count[i] as f64, stats.y_sum[(i, k)], y_sq[(i, k)]),
                (Some(ws), Power::One) => (ws.w_sum[i], ws.wy_sum[(i, k)], ws.wy_sq_sum[(i, k)]),
                (Some(ws), Power::Two) => (ws.w2_sum[i], ws.w2y_sum[(i, k)], ws.w2y_sq_sum[(i, k)]),
            };
            // a sum of squares; negatives are rounding
            out[(i, k)] = (yh * yh * w - 2.0 * yh * s1 + s2).max(0.0);
        }
    }
    Ok(out)
}

/// Effective sample size and residual degrees of freedom for a table.
pub(crate) fn residual_df(stats: &SuffStatsTable) -> (f64, f64) {
    let n = match &stats.weighted {
        Some(w) if w.kind == WeightKind::Analytic => w.w_sum.iter().sum(),
        _ => stats.num_observations() as f64,
    };
    (n, n - stats.p() as f64)
}

/// RSS per outcome and σ̂² = RSS / (n − p).
///
/// Weighted tables return the weighted residual sum of squares; the
/// denominator is n − p for frequency weights and Σw − p for analytic ones.
pub fn rss_compressed(stats: &SuffStatsTable, beta: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let per_group = group_residual_ss(stats, beta, Power::One)?;
    let (n, df) = residual_df(stats);
    if df.is_nan() || df <= 0.0 {
        return Err(Error::NonPositiveDf { n, p: stats.p() });
    }
    let rss: Vec<f64> = (0..stats.o()).map(|k| per_group.column(k).sum()).collect();
    let sigma2 = rss.iter().map(|r| r / df).collect();
    Ok((rss, sigma2))
}

/// Ξ = σ̂² · M̃ᵀdiag(ñ)M̃.
pub fn meat_homoskedastic(stats: &SuffStatsTable, beta: &DMatrix<f64>) -> Result<MeatMatrix> {
    let (_, sigma2) = rss_compressed(stats, beta)?;
    let gram = weighted_gram(&stats.features, &group_weights(stats));
    Ok(MeatMatrix {
        xi: sigma2.iter().map(|s| &gram * *s).collect(),
        spec: CovarianceSpec::Homoskedastic,
    })
}

/// Ξ = M̃ᵀ diag(R̃SS) M̃, the HC0 meat. Weighted tables use the w² sums.
pub fn meat_ehw(stats: &SuffStatsTable, beta: &DMatrix<f64>) -> Result<MeatMatrix> {
    let per_group = group_residual_ss(stats, beta, Power::Two)?;
    let xi = (0..stats.o())
        .map(|k| {
            let d: Vec<f64> = per_group.column(k).iter().copied().collect();
            weighted_gram(&stats.features, &d)
        })
        .collect();
    Ok(MeatMatrix {
        xi,
        spec: CovarianceSpec::HeteroskedasticEhw,
    })
}

/// Ξ = Σ_c s_c s_cᵀ with s_c = Σ_{g∈c} m̃_g ẽ′_g and ẽ′ = ỹ′ − ñ ⊙ M̃β̂.
///
/// Needs a table compressed with the cluster key. Score vectors are
/// accumulated per cluster in one pass.
pub fn meat_cluster_within(stats: &SuffStatsTable, beta: &DMatrix<f64>) -> Result<MeatMatrix> {
    check_beta(stats, beta)?;
    let labels = stats.clusters.as_ref().ok_or(Error::MissingClusters)?;
    let mut dense: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let cluster_of: Vec<usize> = labels
        .iter()
        .map(|l| {
            let next = dense.len();
            *dense.entry(l.as_str()).or_insert(next)
        })
        .collect();
    let c = dense.len();
    let p = stats.p();
    let fitted = &stats.features * beta;
    let xi = (0..stats.o())
        .map(|k| {
            let mut scores = DMatrix::<f64>::zeros(p, c);
            for (g, &cl) in cluster_of.iter().enumerate() {
                let e = match &stats.weighted {
                    Some(w) => w.wy_sum[(g, k)] - w.w_sum[g] * fitted[(g, k)],
                    None => stats.y_sum[(g, k)] - stats.count[g] as f64 * fitted[(g, k)],
                };
                for j in 0..p {
                    scores[(j, cl)] += stats.features[(g, j)] * e;
                }
            }
            symmetrize(&(&scores * scores.transpose()))
        })
        .collect();
    Ok(MeatMatrix {
        xi,
        spec: CovarianceSpec::ClusterRobust(ClusterStrategy::WithinCluster),
    })
}

pub(crate) fn is_lossy(stats: &SuffStatsTable) -> bool {
    stats.kind == TableKind::GroupMeans
}
