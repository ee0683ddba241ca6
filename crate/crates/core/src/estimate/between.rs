use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimate::wls::{BreadMatrix, MeatMatrix};
use crate::linalg::symmetrize;
use crate::model::{ClusterStatsTable, ClusterStrategy, CovarianceSpec};

/// Bread and coefficients from whole-cluster groups:
/// Σ n_g M̃_gᵀM̃_g and Σ M̃_gᵀỹ′_g.
pub(crate) fn normal_equations(cstats: &ClusterStatsTable) -> (DMatrix<f64>, DMatrix<f64>) {
    let (p, o) = (cstats.p(), cstats.o());
    let mut gram = DMatrix::zeros(p, p);
    let mut rhs = DMatrix::zeros(p, o);
    for g in &cstats.groups {
        let mt = g.features.transpose();
        gram += (&mt * &g.features) * g.count as f64;
        rhs += &mt * &g.y_sum;
    }
    (symmetrize(&gram), rhs)
}

pub fn bread_between(cstats: &ClusterStatsTable) -> Result<BreadMatrix> {
    let (gram, _) = normal_equations(cstats);
    BreadMatrix::from_gram(gram, &cstats.feature_names)
}

/// Ξ = Σ_g M̃_gᵀ (ỹ″_g − ỹ′_g ŷ_gᵀ − ŷ_g ỹ′_gᵀ + n_g ŷ_g ŷ_gᵀ) M̃_g with
/// ŷ_g = M̃_g β̂.
pub fn meat_cluster_between(cstats: &ClusterStatsTable, beta: &DMatrix<f64>) -> Result<MeatMatrix> {
    if beta.nrows() != cstats.p() || beta.ncols() != cstats.o() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients are {}×{}, expected {}×{}",
            beta.nrows(),
            beta.ncols(),
            cstats.p(),
            cstats.o()
        )));
    }
    let p = cstats.p();
    let xi = (0..cstats.o())
        .map(|k| {
            let b = beta.column(k);
            let mut xi = DMatrix::zeros(p, p);
            for g in &cstats.groups {
                let yhat = &g.features * b;
                let ysum = g.y_sum.column(k);
                let cross = ysum * yhat.transpose();
                let inner = &g.y_outer_sum[k] - &cross - cross.transpose()
                    + (&yhat * yhat.transpose()) * g.count as f64;
                xi += g.features.transpose() * inner * &g.features;
            }
            symmetrize(&xi)
        })
        .collect();
    Ok(MeatMatrix {
        xi,
        spec: CovarianceSpec::ClusterRobust(ClusterStrategy::BetweenCluster),
    })
}
