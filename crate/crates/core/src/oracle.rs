//! Brute-force row-level estimators used as ground truth in tests.
//!
//! Nothing here touches the compressed paths: coefficients come from a QR
//! factorization of the raw design, breads from an LU inverse of a gram
//! accumulated row by row, and meats from literal per-row residual sums.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{CovarianceSpec, ObservationSet, WeightKind};

/// Row-level fit: coefficients p×o and residuals n×o (unweighted, y − Mβ̂).
#[derive(Debug, Clone)]
pub struct OracleFit {
    pub beta: DMatrix<f64>,
    pub residuals: DMatrix<f64>,
}

fn row_weight(obs: &ObservationSet, i: usize) -> f64 {
    obs.weights().map_or(1.0, |w| w.values[i])
}

/// Least squares on the raw rows via QR of √w·M. Weighted input gives WLS.
pub fn oracle_ols(obs: &ObservationSet) -> Result<OracleFit> {
    let (n, p) = (obs.n(), obs.p());
    if n < p {
        return Err(Error::RankDeficient {
            columns: obs.feature_names().to_vec(),
        });
    }
    let m = obs.features();
    let y = obs.outcomes();
    let sw: Vec<f64> = (0..n).map(|i| row_weight(obs, i).sqrt()).collect();
    let a = DMatrix::from_fn(n, p, |i, j| sw[i] * m[(i, j)]);
    let b = DMatrix::from_fn(n, obs.o(), |i, k| sw[i] * y[(i, k)]);
    let qr = a.qr();
    let r = qr.r();
    let scale = (0..p).map(|j| r[(j, j)].abs()).fold(0.0_f64, f64::max);
    let weak: Vec<String> = (0..p)
        .filter(|&j| r[(j, j)].abs() <= 1e-10 * scale)
        .map(|j| obs.feature_names()[j].clone())
        .collect();
    if !weak.is_empty() || scale == 0.0 {
        return Err(Error::RankDeficient { columns: weak });
    }
    let qtb = qr.q().transpose() * b;
    let beta = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::RankDeficient { columns: vec![] })?;
    let residuals = y - m * &beta;
    Ok(OracleFit { beta, residuals })
}

/// Residual degrees of freedom: Σw − p for analytic weights, n − p otherwise.
pub fn oracle_df(obs: &ObservationSet) -> f64 {
    let n = match obs.weights() {
        Some(w) if w.kind == WeightKind::Analytic => w.values.iter().sum(),
        _ => obs.n() as f64,
    };
    n - obs.p() as f64
}

/// Σ w e² per outcome.
pub fn oracle_wss(obs: &ObservationSet, residuals: &DMatrix<f64>) -> Vec<f64> {
    (0..obs.o())
        .map(|k| {
            let mut s = 0.0;
            for i in 0..obs.n() {
                let e = residuals[(i, k)];
                s += row_weight(obs, i) * e * e;
            }
            s
        })
        .collect()
}

/// σ̂² per outcome.
pub fn oracle_sigma2(obs: &ObservationSet, residuals: &DMatrix<f64>) -> Vec<f64> {
    let df = oracle_df(obs);
    oracle_wss(obs, residuals).into_iter().map(|s| s / df).collect()
}

fn outer_add(acc: &mut DMatrix<f64>, v: &[f64], scale: f64) {
    let p = v.len();
    for a in 0..p {
        for b in 0..p {
            acc[(a, b)] += scale * v[a] * v[b];
        }
    }
}

/// (Mᵀ W M)⁻¹ from a row-by-row gram and an LU inverse.
pub fn oracle_bread(obs: &ObservationSet) -> Result<DMatrix<f64>> {
    let p = obs.p();
    let mut gram = DMatrix::zeros(p, p);
    let mut row = vec![0.0; p];
    for i in 0..obs.n() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = obs.features()[(i, j)];
        }
        outer_add(&mut gram, &row, row_weight(obs, i));
    }
    gram.try_inverse().ok_or_else(|| Error::RankDeficient {
        columns: obs.feature_names().to_vec(),
    })
}

/// Literal row-level covariance per outcome for `spec`.
///
/// Homoskedastic: σ̂²Π. Heteroskedastic: Π(Σ w²e² m mᵀ)Π. Cluster-robust
/// (every strategy): Π(Σ_c s_c s_cᵀ)Π with s_c = Σ_{i∈c} w e m.
pub fn oracle_sandwich(
    obs: &ObservationSet,
    residuals: &DMatrix<f64>,
    spec: CovarianceSpec,
) -> Result<Vec<DMatrix<f64>>> {
    let pi = oracle_bread(obs)?;
    let p = obs.p();
    let n = obs.n();
    let m = obs.features();
    let mut out = Vec::with_capacity(obs.o());
    for k in 0..obs.o() {
        let mut meat = DMatrix::zeros(p, p);
        match spec {
            CovarianceSpec::Homoskedastic => {
                let s2 = oracle_sigma2(obs, residuals)[k];
                out.push(&pi * s2);
                continue;
            }
            CovarianceSpec::HeteroskedasticEhw => {
                let mut row = vec![0.0; p];
                for i in 0..n {
                    for (j, r) in row.iter_mut().enumerate() {
                        *r = m[(i, j)];
                    }
                    let we = row_weight(obs, i) * residuals[(i, k)];
                    outer_add(&mut meat, &row, we * we);
                }
            }
            CovarianceSpec::ClusterRobust(_) => {
                let clusters = obs.clusters().ok_or(Error::MissingClusters)?;
                let mut scores = vec![vec![0.0; p]; clusters.num_clusters()];
                for i in 0..n {
                    let c = clusters.index()[i];
                    let we = row_weight(obs, i) * residuals[(i, k)];
                    for (j, s) in scores[c].iter_mut().enumerate() {
                        *s += we * m[(i, j)];
                    }
                }
                for s in &scores {
                    outer_add(&mut meat, s, 1.0);
                }
            }
        }
        out.push(&pi * meat * &pi);
    }
    Ok(out)
}

/// Row-level log-likelihood Σ yz − log(1 + eᶻ) for a single 0/1 outcome.
pub fn oracle_loglik(obs: &ObservationSet, beta: &DVector<f64>) -> f64 {
    let m = obs.features();
    let mut ll = 0.0;
    for i in 0..obs.n() {
        let mut z = 0.0;
        for j in 0..obs.p() {
            z += m[(i, j)] * beta[j];
        }
        let log1pexp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        ll += obs.outcomes()[(i, 0)] * z - log1pexp;
    }
    ll
}

/// Newton iteration on the raw rows, solving each step by LU.
pub fn oracle_logistic(obs: &ObservationSet) -> Result<DVector<f64>> {
    let (n, p) = (obs.n(), obs.p());
    let m = obs.features();
    let mut beta = DVector::zeros(p);
    for iteration in 0..200 {
        let mut grad = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        let mut row = vec![0.0; p];
        for i in 0..n {
            for (j, r) in row.iter_mut().enumerate() {
                *r = m[(i, j)];
            }
            let z: f64 = row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
            let s = 1.0 / (1.0 + (-z).exp());
            let resid = obs.outcomes()[(i, 0)] - s;
            for j in 0..p {
                grad[j] += resid * row[j];
            }
            outer_add(&mut info, &row, s * (1.0 - s));
        }
        let step = info
            .lu()
            .solve(&grad)
            .ok_or(Error::DidNotConverge { iterations: iteration })?;
        beta += &step;
        if step.amax() <= 1e-13 * (1.0 + beta.amax()) {
            return Ok(beta);
        }
        if !beta.iter().all(|b| b.is_finite()) || beta.amax() > 1e3 {
            break;
        }
    }
    Err(Error::DidNotConverge { iterations: 200 })
}

/// max|a − b| / max|b|, the norm-wise relative difference used in tests.
pub fn max_rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in comparison");
    let scale = b.amax();
    let diff = (a - b).amax();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClusterLabels;

    fn obs(m: &[f64], p: usize, y: &[f64]) -> ObservationSet {
        let n = y.len();
        ObservationSet::new(
            DMatrix::from_row_slice(n, p, m),
            (0..p).map(|j| format!("x{j}")).collect(),
            DMatrix::from_column_slice(n, 1, y),
            vec!["y".into()],
        )
        .unwrap()
    }

    #[test]
    fn noiseless_recovery() {
        let o = obs(&[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 5.0], 2, &[3.0, 5.0, 7.0, 13.0]);
        let f = oracle_ols(&o).unwrap();
        assert!((f.beta[(0, 0)] - 3.0).abs() < 1e-12);
        assert!((f.beta[(1, 0)] - 2.0).abs() < 1e-12);
        assert!(f.residuals.amax() < 1e-12);
        let v = oracle_sandwich(&o, &f.residuals, CovarianceSpec::HeteroskedasticEhw).unwrap();
        assert!(v[0].amax() < 1e-20);
    }

    #[test]
    fn intercept_only_is_mean() {
        let o = obs(&[1.0, 1.0, 1.0], 1, &[1.0, 2.0, 6.0]);
        assert!((oracle_ols(&o).unwrap().beta[(0, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_clusters_equal_hc() {
        let o = obs(&[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 5.0], 2, &[3.0, 4.0, 8.0, 13.0]);
        let o = o
            .with_clusters(ClusterLabels::from_labels(["a", "b", "c", "d"]))
            .unwrap();
        let f = oracle_ols(&o).unwrap();
        let hc = oracle_sandwich(&o, &f.residuals, CovarianceSpec::HeteroskedasticEhw).unwrap();
        let cl = oracle_sandwich(
            &o,
            &f.residuals,
            CovarianceSpec::ClusterRobust(crate::model::ClusterStrategy::WithinCluster),
        )
        .unwrap();
        assert!(max_rel_diff(&cl[0], &hc[0]) < 1e-14);
    }

    #[test]
    fn two_cluster_hand_computation() {
        // x = (0,1,0,1), y = (1,2,3,6), clusters {0,1} and {2,3}
        // β̂ = (2, 2): residuals (−1, −2, 1, 2)
        // s_a = Σ e m = (−3, −2), s_b = (3, 2)
        // Ξ = 2·[[9,6],[6,4]] = [[18,12],[12,8]]
        // Π = [[4,2],[2,2]]⁻¹ = [[0.5,−0.5],[−0.5,1]], Π Ξ = [[3,2],[3,2]]
        // V = Π Ξ Π = [[0.5, 0.5], [0.5, 0.5]]
        let o = obs(&[1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0], 2, &[1.0, 2.0, 3.0, 6.0]);
        let o = o.with_clusters(ClusterLabels::from_labels(["a", "a", "b", "b"])).unwrap();
        let f = oracle_ols(&o).unwrap();
        assert!((f.beta[(0, 0)] - 2.0).abs() < 1e-12 && (f.beta[(1, 0)] - 2.0).abs() < 1e-12);
        let v = oracle_sandwich(
            &o,
            &f.residuals,
            CovarianceSpec::ClusterRobust(crate::model::ClusterStrategy::WithinCluster),
        )
        .unwrap();
        let expected = DMatrix::from_element(2, 2, 0.5);
        assert!((&v[0] - expected).amax() < 1e-12);
    }

    #[test]
    fn missing_clusters() {
        let o = obs(&[1.0, 1.0], 1, &[1.0, 2.0]);
        let f = oracle_ols(&o).unwrap();
        assert!(matches!(
            oracle_sandwich(
                &o,
                &f.residuals,
                CovarianceSpec::ClusterRobust(crate::model::ClusterStrategy::WithinCluster)
            ),
            Err(Error::MissingClusters)
        ));
    }

    #[test]
    fn logistic_intercept_only() {
        let y = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let o = obs(&[1.0; 10], 1, &y);
        let b = oracle_logistic(&o).unwrap();
        assert!((b[0] - (3.0f64 / 7.0).ln()).abs() < 1e-12);
    }
}
