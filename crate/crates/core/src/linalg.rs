//! Dense symmetric positive-definite factorization used for every bread and
//! every coefficient solve.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest gram diagonal count as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Lower Cholesky factor `L` with `gram = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    l: DMatrix<f64>,
    min_pivot_ratio: f64,
}

impl SpdFactor {
    /// Factors `gram`. On a pivot below tolerance, reports the offending column
    /// together with the earlier columns it is a combination of.
    pub fn new(gram: &DMatrix<f64>, names: &[String]) -> Result<Self> {
        let p = gram.nrows();
        debug_assert_eq!(p, gram.ncols());
        let max_diag = (0..p).map(|i| gram[(i, i)]).fold(0.0_f64, f64::max);
        let tol = PIVOT_TOLERANCE * max_diag;
        let mut l = DMatrix::<f64>::zeros(p, p);
        let mut min_pivot_ratio = f64::INFINITY;
        for j in 0..p {
            let mut d = gram[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d.is_nan() || d <= tol {
                return Err(Error::RankDeficient {
                    columns: collinear_set(gram, &l, j, names),
                });
            }
            if max_diag > 0.0 {
                min_pivot_ratio = min_pivot_ratio.min(d / max_diag);
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..p {
                let mut s = gram[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(SpdFactor { l, min_pivot_ratio })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Smallest pivot relative to the largest gram diagonal.
    pub fn min_pivot_ratio(&self) -> f64 {
        self.min_pivot_ratio
    }

    /// Solves `gram · X = B` for every column of `B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.dim();
        let mut x = b.clone();
        for col in 0..x.ncols() {
            forward(&self.l, p, &mut x, col);
            for i in (0..p).rev() {
                let mut s = x[(i, col)];
                for k in (i + 1)..p {
                    s -= self.l[(k, i)] * x[(k, col)];
                }
                x[(i, col)] = s / self.l[(i, i)];
            }
        }
        x
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        symmetrize(&self.solve(&DMatrix::identity(self.dim(), self.dim())))
    }
}

fn forward(l: &DMatrix<f64>, p: usize, x: &mut DMatrix<f64>, col: usize) {
    for i in 0..p {
        let mut s = x[(i, col)];
        for k in 0..i {
            s -= l[(i, k)] * x[(k, col)];
        }
        x[(i, col)] = s / l[(i, i)];
    }
}

/// Columns involved in the dependency of column `j` on columns `0..j`, using
/// the already-computed leading factor.
fn collinear_set(gram: &DMatrix<f64>, l: &DMatrix<f64>, j: usize, names: &[String]) -> Vec<String> {
    let name = |i: usize| names.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
    if j == 0 {
        return vec![name(0)];
    }
    // c solves G[..j, ..j] c = G[..j, j]
    let lead = l.view((0, 0), (j, j)).into_owned();
    let mut c = DMatrix::from_fn(j, 1, |i, _| gram[(i, j)]);
    forward(&lead, j, &mut c, 0);
    for i in (0..j).rev() {
        let mut s = c[(i, 0)];
        for k in (i + 1)..j {
            s -= lead[(k, i)] * c[(k, 0)];
        }
        c[(i, 0)] = s / lead[(i, i)];
    }
    let scale_j = gram[(j, j)].abs().sqrt();
    let mut out: Vec<String> = (0..j)
        .filter(|&i| c[(i, 0)].abs() * gram[(i, i)].abs().sqrt() > 1e-8 * scale_j.max(f64::MIN_POSITIVE))
        .map(name)
        .collect();
    out.push(name(j));
    out
}

/// (A + Aᵀ) / 2.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Π Ξ Π, symmetrized.
pub fn sandwich(bread: &DMatrix<f64>, meat: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(bread * meat * bread))
}
