use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::ObservationSet;

/// Upper edges of `k` quantile bins by the nearest-rank method: edge `j` is
/// the `ceil(j·n/k)`-th smallest value. Repeated edges collapse, and edges at
/// or above the maximum are dropped since their upper bin would be empty.
pub fn quantile_edges(values: &[f64], k: usize) -> Vec<f64> {
    let n = values.len();
    if n == 0 || k <= 1 {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let max = sorted[n - 1];
    let mut edges: Vec<f64> = (1..k)
        .map(|j| sorted[(j * n).div_ceil(k) - 1])
        .filter(|&e| e < max)
        .collect();
    edges.dedup();
    edges
}

/// Bin index of `v`: intervals are closed on the right, so a value equal to
/// an edge lands in the lower bin.
pub fn bin_of(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e < v)
}

/// Replaces each selected column by indicator columns for its quantile bins,
/// omitting the first (reference) bin. Dummies are named `<col>_bin<j>`.
pub fn bin_features<S: AsRef<str>>(obs: &ObservationSet, columns: &[S], k: usize) -> Result<ObservationSet> {
    if k == 0 {
        return Err(Error::InvalidArgument("bin count must be at least 1".into()));
    }
    obs.validate()?;
    let targets = columns
        .iter()
        .map(|c| obs.feature_index(c.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let n = obs.n();
    let m = obs.features();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for j in 0..obs.p() {
        let name = &obs.feature_names()[j];
        let values: Vec<f64> = m.column(j).iter().copied().collect();
        if !targets.contains(&j) {
            cols.push(values);
            names.push(name.clone());
            continue;
        }
        let edges = quantile_edges(&values, k);
        let bins: Vec<usize> = values.iter().map(|&v| bin_of(&edges, v)).collect();
        for b in 1..=edges.len() {
            cols.push(bins.iter().map(|&x| f64::from(u8::from(x == b))).collect());
            names.push(format!("{name}_bin{b}"));
        }
    }
    let features = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    obs.with_features(features, names)
}
