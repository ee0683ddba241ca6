//! Cluster-robust estimation from the static/dynamic split.
//!
//! With the design `[M₁ | M₂ | M₃]`, `M₃` the interactions of selected static
//! columns with every dynamic column, each cluster's gram block K¹_c and
//! moment K²_c are functions of n_c, the static row m₁,c, the dynamic column
//! sums a_c = M₂,cᵀ1, the dynamic gram D_c = M₂,cᵀM₂,c and b_c = M₂,cᵀy_c.
//! Within a cluster the fitted values are `u_c + M₂,c v_c` with
//! `u_c = m₁,cᵀβ₁` and `v_c = β₂ + Matrix(β₃, p₂, q) m₁ₛ,c`, which gives the
//! score K²_c − K¹_c β̂ without building K¹_c.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimate::wls::MeatMatrix;
use crate::linalg::symmetrize;
use crate::model::{ClusterStrategy, CovarianceSpec, DynamicBlocks, PanelStatsTable};

/// Column blocks of the implied design.
struct Dims {
    p1: usize,
    p2: usize,
    q: usize,
}

impl Dims {
    fn of(t: &PanelStatsTable) -> Self {
        Dims {
            p1: t.p_static(),
            p2: t.p_dynamic(),
            q: t.interactions.len(),
        }
    }

    fn p(&self) -> usize {
        self.p1 + self.p2 * (1 + self.q)
    }
}

fn static_row(t: &PanelStatsTable, c: usize) -> DVector<f64> {
    t.static_features.row(c).transpose()
}

fn interacting(t: &PanelStatsTable, m1: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(t.interactions.len(), t.interactions.iter().map(|&s| m1[s]))
}

/// (a_c, D_c) for cluster `c`.
fn dynamic_blocks(t: &PanelStatsTable, c: usize) -> (DVector<f64>, &DMatrix<f64>) {
    match &t.dynamic {
        DynamicBlocks::PerCluster { col_sums, gram } => (col_sums.column(c).into_owned(), &gram[c]),
        DynamicBlocks::Balanced(b) => (b.col_sum.clone(), &b.gram),
    }
}

/// Splits one outcome's coefficients into (β₁, β₂, Matrix(β₃, p₂, q)).
fn split_beta(d: &Dims, beta: &DMatrix<f64>, k: usize) -> (DVector<f64>, DVector<f64>, DMatrix<f64>) {
    let col = beta.column(k);
    let b1 = col.rows(0, d.p1).into_owned();
    let b2 = col.rows(d.p1, d.p2).into_owned();
    let b3 = DMatrix::from_column_slice(d.p2, d.q, col.rows(d.p1 + d.p2, d.p2 * d.q).as_slice());
    (b1, b2, b3)
}

fn check_beta(t: &PanelStatsTable, beta: &DMatrix<f64>) -> Result<()> {
    if beta.nrows() != t.p() || beta.ncols() != t.o() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients are {}×{}, expected {}×{}",
            beta.nrows(),
            beta.ncols(),
            t.p(),
            t.o()
        )));
    }
    Ok(())
}

/// Writes `x ⊗ y` into `dst` starting at `offset` (x-major).
fn put_kron(dst: &mut DMatrix<f64>, col: usize, offset: usize, x: &DVector<f64>, y: &DVector<f64>) {
    for (s, xs) in x.iter().enumerate() {
        for (d, yd) in y.iter().enumerate() {
            dst[(offset + s * y.len() + d, col)] = xs * yd;
        }
    }
}

/// Σ_c K¹_c and Σ_c K²_c, assembling K¹_c cluster by cluster.
pub(crate) fn normal_equations_static_dynamic(t: &PanelStatsTable) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = Dims::of(t);
    let (p1, p2) = (d.p1, d.p2);
    let p = d.p();
    let o = t.o();
    let mut gram = DMatrix::zeros(p, p);
    let mut rhs = DMatrix::zeros(p, o);
    let mut k1 = DMatrix::zeros(p, p);
    for c in 0..t.num_clusters() {
        let m1 = static_row(t, c);
        let m1s = interacting(t, &m1);
        let n = t.cluster_size[c] as f64;
        let (a, dg) = dynamic_blocks(t, c);
        let m1s_a = m1s.kronecker(&a);
        k1.fill(0.0);
        k1.view_mut((0, 0), (p1, p1)).copy_from(&(&m1 * m1.transpose() * n));
        k1.view_mut((0, p1), (p1, p2)).copy_from(&(&m1 * a.transpose()));
        k1.view_mut((0, p1 + p2), (p1, p - p1 - p2))
            .copy_from(&(&m1 * m1s_a.transpose()));
        k1.view_mut((p1, p1), (p2, p2)).copy_from(dg);
        k1.view_mut((p1, p1 + p2), (p2, p - p1 - p2))
            .copy_from(&m1s.transpose().kronecker(dg));
        k1.view_mut((p1 + p2, p1 + p2), (p - p1 - p2, p - p1 - p2))
            .copy_from(&(&m1s * m1s.transpose()).kronecker(dg));
        for i in 0..p {
            for j in 0..i {
                k1[(i, j)] = k1[(j, i)];
            }
        }
        gram += &k1;
        for k in 0..o {
            let b = t.y_weighted[k].column(c).into_owned();
            let ys = t.y_sum[(c, k)];
            for i in 0..p1 {
                rhs[(i, k)] += m1[i] * ys;
            }
            for i in 0..p2 {
                rhs[(p1 + i, k)] += b[i];
            }
            let mut tail = DMatrix::zeros(p, 1);
            put_kron(&mut tail, 0, p1 + p2, &m1s, &b);
            for i in (p1 + p2)..p {
                rhs[(i, k)] += tail[(i, 0)];
            }
        }
    }
    (symmetrize(&gram), rhs)
}

/// Ξ = Σ_c (K²_c − K¹_c β̂)(K²_c − K¹_c β̂)ᵀ from per-cluster blocks.
pub fn meat_cluster_static_dynamic(t: &PanelStatsTable, beta: &DMatrix<f64>) -> Result<MeatMatrix> {
    check_beta(t, beta)?;
    let d = Dims::of(t);
    let (p1, p2, p) = (d.p1, d.p2, d.p());
    let c_count = t.num_clusters();
    let xi = (0..t.o())
        .map(|k| {
            let (b1, b2, b3) = split_beta(&d, beta, k);
            let mut scores = DMatrix::zeros(p, c_count);
            for c in 0..c_count {
                let m1 = static_row(t, c);
                let m1s = interacting(t, &m1);
                let n = t.cluster_size[c] as f64;
                let (a, dg) = dynamic_blocks(t, c);
                let u = m1.dot(&b1);
                let v = &b2 + &b3 * &m1s;
                let static_resid = t.y_sum[(c, k)] - n * u - a.dot(&v);
                for i in 0..p1 {
                    scores[(i, c)] = m1[i] * static_resid;
                }
                let r = t.y_weighted[k].column(c) - &a * u - dg * &v;
                for i in 0..p2 {
                    scores[(p1 + i, c)] = r[i];
                }
                put_kron(&mut scores, c, p1 + p2, &m1s, &r);
            }
            symmetrize(&(&scores * scores.transpose()))
        })
        .collect();
    Ok(MeatMatrix {
        xi,
        spec: CovarianceSpec::ClusterRobust(ClusterStrategy::StaticDynamic),
    })
}

fn balanced(t: &PanelStatsTable) -> Result<&crate::model::BalancedPanel> {
    match &t.dynamic {
        DynamicBlocks::Balanced(b) => Ok(b),
        DynamicBlocks::PerCluster { .. } => Err(Error::NotBalanced),
    }
}

/// Σ_c K¹_c and Σ_c K²_c from the shared block via Kronecker identities:
/// the interaction gram is (M̃₁ₛᵀM̃₁ₛ) ⊗ (M̃₂ᵀM̃₂) and the dynamic moments are
/// M̃₂ᵀ Matrix(y, T, C).
pub(crate) fn normal_equations_balanced(t: &PanelStatsTable) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let bp = balanced(t)?;
    let d = Dims::of(t);
    let (p1, p2, q, p) = (d.p1, d.p2, d.q, d.p());
    let c = t.num_clusters() as f64;
    let m1 = &t.static_features;
    let m1s = m1.select_columns(&t.interactions);
    let ones = DVector::from_element(t.num_clusters(), 1.0);
    let a = &bp.col_sum;
    let dg = &bp.gram;

    let mut gram = DMatrix::zeros(p, p);
    gram.view_mut((0, 0), (p1, p1))
        .copy_from(&(m1.transpose() * m1 * bp.periods as f64));
    gram.view_mut((0, p1), (p1, p2))
        .copy_from(&(m1.transpose() * &ones * a.transpose()));
    gram.view_mut((0, p1 + p2), (p1, q * p2))
        .copy_from(&(m1.transpose() * &m1s).kronecker(&a.transpose()));
    gram.view_mut((p1, p1), (p2, p2)).copy_from(&(dg * c));
    gram.view_mut((p1, p1 + p2), (p2, q * p2))
        .copy_from(&(ones.transpose() * &m1s).kronecker(dg));
    gram.view_mut((p1 + p2, p1 + p2), (q * p2, q * p2))
        .copy_from(&(m1s.transpose() * &m1s).kronecker(dg));
    for i in 0..p {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }

    let mut rhs = DMatrix::zeros(p, t.o());
    for k in 0..t.o() {
        let moments = bp.block.transpose() * &bp.y_matrix[k];
        rhs.view_mut((0, k), (p1, 1))
            .copy_from(&(m1.transpose() * t.y_sum.column(k)));
        rhs.view_mut((p1, k), (p2, 1)).copy_from(&(&moments * &ones));
        let vec_b = &moments * &m1s;
        rhs.view_mut((p1 + p2, k), (q * p2, 1))
            .copy_from_slice(vec_b.as_slice());
    }
    Ok((gram, rhs))
}

/// Same value as [`meat_cluster_static_dynamic`], computed for all clusters
/// at once from the shared block and Matrix(y, T, C).
pub fn meat_balanced_panel(t: &PanelStatsTable, beta: &DMatrix<f64>) -> Result<MeatMatrix> {
    let bp = balanced(t)?;
    check_beta(t, beta)?;
    let d = Dims::of(t);
    let (p1, p2, q, p) = (d.p1, d.p2, d.q, d.p());
    let cc = t.num_clusters();
    let m1 = &t.static_features;
    let m1s = m1.select_columns(&t.interactions);
    let ones = DVector::from_element(cc, 1.0);
    let periods = bp.periods as f64;
    let a = &bp.col_sum;
    let dg = &bp.gram;
    let xi = (0..t.o())
        .map(|k| {
            let (b1, b2, b3) = split_beta(&d, beta, k);
            // u_c and the per-cluster dynamic slopes v_c as columns
            let u = m1 * &b1;
            let v = &b2 * ones.transpose() + &b3 * m1s.transpose();
            let fitted_sum = &u * periods + v.transpose() * a;
            let static_resid = t.y_sum.column(k) - fitted_sum;
            let moments = bp.block.transpose() * &bp.y_matrix[k];
            let r = moments - a * u.transpose() - dg * &v;

            let mut scores = DMatrix::zeros(p, cc);
            // M̃₁ᵀ diag(ỹ′ − fitted sums), column-scaled in place
            let mut top = m1.transpose();
            for (c, mut col) in top.column_iter_mut().enumerate() {
                col *= static_resid[c];
            }
            scores.view_mut((0, 0), (p1, cc)).copy_from(&top);
            scores.view_mut((p1, 0), (p2, cc)).copy_from(&r);
            for s in 0..q {
                let block = r.component_mul(&(DVector::from_element(p2, 1.0) * m1s.column(s).transpose()));
                scores.view_mut((p1 + p2 + s * p2, 0), (p2, cc)).copy_from(&block);
            }
            symmetrize(&(&scores * scores.transpose()))
        })
        .collect();
    Ok(MeatMatrix {
        xi,
        spec: CovarianceSpec::ClusterRobust(ClusterStrategy::BalancedPanel),
    })
}
