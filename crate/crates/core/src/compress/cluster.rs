//! Cluster-aware compressions: whole-cluster grouping and the static/dynamic
//! split.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::compress::key::{canonical_eq, cmp_values, encode_into};
use crate::error::{Error, Result};
use crate::model::{
    BalancedPanel, ClusterGroup, ClusterLabels, ClusterStatsTable, DynamicBlocks, ObservationSet,
    PanelStatsTable,
};

/// Rows of each cluster, contiguous: cluster `c` owns
/// `rows[starts[c]..starts[c + 1]]`.
pub(crate) struct ClusterRows {
    pub starts: Vec<usize>,
    pub rows: Vec<usize>,
}

impl ClusterRows {
    pub fn of(&self, c: usize) -> &[usize] {
        &self.rows[self.starts[c]..self.starts[c + 1]]
    }

    pub fn num_clusters(&self) -> usize {
        self.starts.len() - 1
    }
}

/// Buckets rows by cluster, ordering each bucket by `order` (or by row
/// position when absent).
pub(crate) fn cluster_rows(clusters: &ClusterLabels, order: Option<&[f64]>) -> Result<ClusterRows> {
    let n = clusters.len();
    let c = clusters.num_clusters();
    if let Some(ord) = order {
        if ord.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} ordering keys for {n} rows",
                ord.len()
            )));
        }
    }
    let mut starts = vec![0usize; c + 1];
    for &k in clusters.index() {
        starts[k + 1] += 1;
    }
    for k in 0..c {
        starts[k + 1] += starts[k];
    }
    let mut fill = starts.clone();
    let mut rows = vec![0usize; n];
    for (i, &k) in clusters.index().iter().enumerate() {
        rows[fill[k]] = i;
        fill[k] += 1;
    }
    if let Some(ord) = order {
        for k in 0..c {
            let bucket = &mut rows[starts[k]..starts[k + 1]];
            bucket.sort_by(|&a, &b| ord[a].total_cmp(&ord[b]));
            for w in bucket.windows(2) {
                let (a, b) = (ord[w[0]], ord[w[1]]);
                if !a.is_finite() || !b.is_finite() || canonical_eq(a, b) {
                    return Err(Error::RaggedCluster(format!(
                        "ordering key {} repeats or is not finite in cluster `{}`",
                        if a.is_finite() { b } else { a },
                        clusters.labels()[k]
                    )));
                }
            }
            if bucket.len() == 1 && !ord[bucket[0]].is_finite() {
                return Err(Error::RaggedCluster(format!(
                    "ordering key is not finite in cluster `{}`",
                    clusters.labels()[k]
                )));
            }
        }
    }
    Ok(ClusterRows { starts, rows })
}

/// Groups whole clusters whose ordered feature blocks are identical, keeping
/// per group Σ y_c, Σ y_c y_cᵀ and the number of clusters.
pub fn compress_between_cluster(obs: &ObservationSet, order: Option<&[f64]>) -> Result<ClusterStatsTable> {
    obs.validate()?;
    let clusters = obs.clusters().ok_or(Error::MissingClusters)?;
    if obs.weights().is_some() {
        return Err(Error::Unsupported("weights with between-cluster compression".into()));
    }
    let layout = cluster_rows(clusters, order)?;
    let (p, o) = (obs.p(), obs.o());
    let m = obs.features();
    let y = obs.outcomes();

    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut groups: Vec<ClusterGroup> = Vec::new();
    let mut key = Vec::new();
    for c in 0..layout.num_clusters() {
        let rows = layout.of(c);
        let t = rows.len();
        key.clear();
        key.extend_from_slice(&(t as u64).to_le_bytes());
        for &r in rows {
            encode_into((0..p).map(|j| m[(r, j)]), &mut key);
        }
        let g = match index.get(key.as_slice()) {
            Some(&g) => g,
            None => {
                let g = groups.len();
                index.insert(key.clone(), g);
                groups.push(ClusterGroup {
                    features: DMatrix::from_fn(t, p, |i, j| m[(rows[i], j)]),
                    y_sum: DMatrix::zeros(t, o),
                    y_outer_sum: vec![DMatrix::zeros(t, t); o],
                    count: 0,
                });
                g
            }
        };
        let entry = &mut groups[g];
        if entry.features.nrows() != t {
            return Err(Error::RaggedCluster(format!(
                "cluster `{}` has {t} rows but its group has {}",
                clusters.labels()[c],
                entry.features.nrows()
            )));
        }
        entry.count += 1;
        for k in 0..o {
            let yc = DVector::from_iterator(t, rows.iter().map(|&r| y[(r, k)]));
            for i in 0..t {
                entry.y_sum[(i, k)] += yc[i];
            }
            entry.y_outer_sum[k].ger(1.0, &yc, &yc, 1.0);
        }
    }
    groups.sort_by(|a, b| {
        a.features
            .nrows()
            .cmp(&b.features.nrows())
            .then_with(|| cmp_values(&row_major(&a.features), &row_major(&b.features)))
    });
    Ok(ClusterStatsTable {
        feature_names: obs.feature_names().to_vec(),
        outcome_names: obs.outcome_names().to_vec(),
        groups,
    })
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Column roles for the static/dynamic split.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PanelLayout {
    /// Columns constant within every cluster.
    pub static_cols: Vec<String>,
    /// Columns that may vary within a cluster.
    pub dynamic_cols: Vec<String>,
    /// Static columns to interact with every dynamic column.
    pub interactions: Vec<String>,
}

impl PanelLayout {
    pub fn new<S: AsRef<str>>(static_cols: &[S], dynamic_cols: &[S], interactions: &[S]) -> Self {
        let own = |v: &[S]| v.iter().map(|s| s.as_ref().to_owned()).collect();
        PanelLayout {
            static_cols: own(static_cols),
            dynamic_cols: own(dynamic_cols),
            interactions: own(interactions),
        }
    }

    /// Splits the feature columns of `obs` into static and dynamic, with the
    /// named columns static and the rest dynamic.
    pub fn from_static(obs: &ObservationSet, static_cols: &[String], interactions: &[String]) -> Self {
        PanelLayout {
            static_cols: static_cols.to_vec(),
            dynamic_cols: obs
                .feature_names()
                .iter()
                .filter(|n| !static_cols.contains(n))
                .cloned()
                .collect(),
            interactions: interactions.to_vec(),
        }
    }

    fn resolve(&self, obs: &ObservationSet) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let s = self
            .static_cols
            .iter()
            .map(|c| obs.feature_index(c))
            .collect::<Result<Vec<_>>>()?;
        let d = self
            .dynamic_cols
            .iter()
            .map(|c| obs.feature_index(c))
            .collect::<Result<Vec<_>>>()?;
        let mut all: Vec<usize> = s.iter().chain(&d).copied().collect();
        all.sort_unstable();
        all.dedup();
        if all.len() != s.len() + d.len() || all.len() != obs.p() {
            return Err(Error::InvalidArgument(
                "static and dynamic columns must partition the feature columns".into(),
            ));
        }
        let inter = self
            .interactions
            .iter()
            .map(|c| {
                self.static_cols
                    .iter()
                    .position(|s| s == c)
                    .ok_or_else(|| Error::InvalidArgument(format!("interaction column `{c}` is not static")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((s, d, inter))
    }

    /// Materializes the implied design `[M₁ | M₂ | M₃]` row by row. Used by
    /// row-level references and by the compressions that need explicit
    /// interaction columns.
    pub fn expand(&self, obs: &ObservationSet) -> Result<ObservationSet> {
        let (s, d, inter) = self.resolve(obs)?;
        let n = obs.n();
        let p = s.len() + d.len() * (1 + inter.len());
        let m = obs.features();
        let mut out = DMatrix::zeros(n, p);
        let mut names: Vec<String> = s.iter().chain(&d).map(|&j| obs.feature_names()[j].clone()).collect();
        for (col, &j) in s.iter().chain(&d).enumerate() {
            out.set_column(col, &m.column(j));
        }
        let mut col = s.len() + d.len();
        for &si in &inter {
            for &dj in &d {
                let sj = s[si];
                for i in 0..n {
                    out[(i, col)] = m[(i, sj)] * m[(i, dj)];
                }
                names.push(format!("{}:{}", obs.feature_names()[sj], obs.feature_names()[dj]));
                col += 1;
            }
        }
        obs.with_features(out, names)
    }
}

/// Compresses a clustered data set to one static row per cluster plus the
/// cluster-level dynamic aggregates M₂ᵀW_C, M₂ᵀdiag(y)W_C and M₂,cᵀM₂,c.
///
/// When every cluster carries the same ordered dynamic block the table is
/// stored in balanced form: a single shared block and the outcomes reshaped
/// T×C.
pub fn compress_panel(obs: &ObservationSet, layout: &PanelLayout, order: Option<&[f64]>) -> Result<PanelStatsTable> {
    obs.validate()?;
    let clusters = obs.clusters().ok_or(Error::MissingClusters)?;
    if obs.weights().is_some() {
        return Err(Error::Unsupported("weights with static/dynamic compression".into()));
    }
    let (s_idx, d_idx, inter) = layout.resolve(obs)?;
    let rows = cluster_rows(clusters, order)?;
    let c_count = rows.num_clusters();
    let (p1, p2, o) = (s_idx.len(), d_idx.len(), obs.o());
    let m = obs.features();
    let y = obs.outcomes();

    let mut static_features = DMatrix::zeros(c_count, p1);
    let mut cluster_size = Vec::with_capacity(c_count);
    let mut y_sum = DMatrix::zeros(c_count, o);
    let mut col_sums = DMatrix::zeros(p2, c_count);
    let mut y_weighted = vec![DMatrix::zeros(p2, c_count); o];
    let mut gram = Vec::with_capacity(c_count);

    // balanced while every cluster repeats the first cluster's ordered block
    let mut balanced = c_count > 0;
    let first_block: Vec<usize> = if c_count > 0 { rows.of(0).to_vec() } else { Vec::new() };

    for c in 0..c_count {
        let rc = rows.of(c);
        let head = rc[0];
        for (a, &j) in s_idx.iter().enumerate() {
            let v = m[(head, j)];
            static_features[(c, a)] = v;
            if rc.iter().any(|&r| !canonical_eq(m[(r, j)], v)) {
                return Err(Error::NonStaticColumn {
                    column: obs.feature_names()[j].clone(),
                    cluster: clusters.labels()[c].clone(),
                });
            }
        }
        cluster_size.push(rc.len() as u64);
        let mut dc = DMatrix::zeros(p2, p2);
        for &r in rc {
            for (a, &ja) in d_idx.iter().enumerate() {
                let va = m[(r, ja)];
                col_sums[(a, c)] += va;
                for k in 0..o {
                    y_weighted[k][(a, c)] += va * y[(r, k)];
                }
                for (b, &jb) in d_idx.iter().enumerate() {
                    dc[(a, b)] += va * m[(r, jb)];
                }
            }
            for k in 0..o {
                y_sum[(c, k)] += y[(r, k)];
            }
        }
        gram.push(dc);
        if balanced && c > 0 {
            balanced = rc.len() == first_block.len()
                && rc
                    .iter()
                    .zip(&first_block)
                    .all(|(&r, &f)| d_idx.iter().all(|&j| canonical_eq(m[(r, j)], m[(f, j)])));
        }
    }

    let dynamic = if balanced {
        let t = first_block.len();
        let block = DMatrix::from_fn(t, p2, |i, a| m[(first_block[i], d_idx[a])]);
        let y_matrix = (0..o)
            .map(|k| DMatrix::from_fn(t, c_count, |i, c| y[(rows.of(c)[i], k)]))
            .collect();
        DynamicBlocks::Balanced(BalancedPanel {
            periods: t,
            col_sum: DVector::from_iterator(p2, (0..p2).map(|a| col_sums[(a, 0)])),
            gram: gram.swap_remove(0),
            block,
            y_matrix,
        })
    } else {
        DynamicBlocks::PerCluster { col_sums, gram }
    };

    Ok(PanelStatsTable {
        static_names: s_idx.iter().map(|&j| obs.feature_names()[j].clone()).collect(),
        dynamic_names: d_idx.iter().map(|&j| obs.feature_names()[j].clone()).collect(),
        interactions: inter,
        outcome_names: obs.outcome_names().to_vec(),
        cluster_labels: clusters.labels().to_vec(),
        static_features,
        cluster_size,
        y_sum,
        y_weighted,
        dynamic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(rows: &[(&str, f64, f64, f64)]) -> ObservationSet {
        // (cluster, static x, dynamic t, y)
        let n = rows.len();
        ObservationSet::new(
            DMatrix::from_fn(n, 2, |i, j| if j == 0 { rows[i].1 } else { rows[i].2 }),
            vec!["x".into(), "t".into()],
            DMatrix::from_fn(n, 1, |i, _| rows[i].3),
            vec!["y".into()],
        )
        .unwrap()
        .with_clusters(ClusterLabels::from_labels(rows.iter().map(|r| r.0)))
        .unwrap()
    }

    #[test]
    fn between_cluster_sums_outer_products() {
        let obs = ObservationSet::new(
            DMatrix::from_row_slice(4, 1, &[1., 2., 1., 2.]),
            vec!["x".into()],
            DMatrix::from_row_slice(4, 1, &[1., 2., 3., 4.]),
            vec!["y".into()],
        )
        .unwrap()
        .with_clusters(ClusterLabels::from_labels(["a", "a", "b", "b"]))
        .unwrap();
        let t = compress_between_cluster(&obs, None).unwrap();
        assert_eq!(t.groups().len(), 1);
        let g = &t.groups()[0];
        assert_eq!(g.count, 2);
        assert_eq!(g.y_sum.as_slice(), &[4.0, 6.0]);
        assert_eq!(g.y_outer_sum[0], DMatrix::from_row_slice(2, 2, &[10., 14., 14., 20.]));
        assert_eq!(t.num_clusters(), 2);
    }

    #[test]
    fn between_cluster_single_cluster_is_one_outer_product() {
        let obs = panel(&[("a", 0., 1., 2.), ("a", 0., 2., 5.)]);
        let t = compress_between_cluster(&obs, None).unwrap();
        let g = &t.groups()[0];
        assert_eq!(g.y_outer_sum[0], DMatrix::from_row_slice(2, 2, &[4., 10., 10., 25.]));
    }

    #[test]
    fn ordering_key_aligns_blocks() {
        // cluster b lists its rows in reverse time order
        let obs = panel(&[("a", 0., 1., 1.), ("a", 0., 2., 2.), ("b", 0., 2., 4.), ("b", 0., 1., 3.)]);
        let unordered = compress_between_cluster(&obs, None).unwrap();
        assert_eq!(unordered.groups().len(), 2);
        let order = [1.0, 2.0, 2.0, 1.0];
        let ordered = compress_between_cluster(&obs, Some(&order)).unwrap();
        assert_eq!(ordered.groups().len(), 1);
        assert_eq!(ordered.groups()[0].y_sum.as_slice(), &[4.0, 6.0]);
    }

    #[test]
    fn repeated_ordering_key_is_ragged() {
        let obs = panel(&[("a", 0., 1., 1.), ("a", 0., 2., 2.)]);
        assert!(matches!(
            compress_between_cluster(&obs, Some(&[1.0, 1.0])),
            Err(Error::RaggedCluster(_))
        ));
    }

    #[test]
    fn balanced_panel_shares_one_gram_block() {
        let obs = panel(&[("a", 0., 1., 1.), ("a", 0., 2., 2.), ("b", 1., 1., 3.), ("b", 1., 2., 5.)]);
        let layout = PanelLayout::new(&["x"], &["t"], &[]);
        let t = compress_panel(&obs, &layout, None).unwrap();
        assert!(t.is_balanced());
        let DynamicBlocks::Balanced(b) = t.dynamic() else { unreachable!() };
        assert_eq!(b.gram, DMatrix::from_element(1, 1, 5.0));
        assert_eq!(b.periods, 2);
        assert_eq!(b.y_matrix[0], DMatrix::from_row_slice(2, 2, &[1., 3., 2., 5.]));
        assert_eq!(t.static_features().as_slice(), &[0.0, 1.0]);
        assert_eq!(t.y_weighted()[0], DMatrix::from_row_slice(1, 2, &[5.0, 13.0]));
    }

    #[test]
    fn empty_dynamic_part_gives_empty_gram_blocks() {
        let obs = panel(&[("a", 0., 1., 1.), ("a", 0., 2., 2.), ("b", 1., 1., 3.)]);
        let layout = PanelLayout::new(&["x", "t"], &[], &[]);
        // t varies within a: not static
        assert!(matches!(
            compress_panel(&obs, &layout, None),
            Err(Error::NonStaticColumn { .. })
        ));
        let obs = obs.with_features(obs.features().columns(0, 1).into_owned(), vec!["x".into()]).unwrap();
        let t = compress_panel(&obs, &PanelLayout::new(&["x"], &[], &[]), None).unwrap();
        assert_eq!(t.p_dynamic(), 0);
        match t.dynamic() {
            DynamicBlocks::PerCluster { gram, .. } => assert!(gram.iter().all(|g| g.shape() == (0, 0))),
            DynamicBlocks::Balanced(b) => assert_eq!(b.gram.shape(), (0, 0)),
        }
        assert_eq!(t.num_clusters(), 2);
    }

    #[test]
    fn layout_must_partition_columns() {
        let obs = panel(&[("a", 0., 1., 1.)]);
        let bad = PanelLayout::new(&["x"], &[], &[]);
        assert!(matches!(compress_panel(&obs, &bad, None), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn expand_builds_interaction_columns() {
        let obs = panel(&[("a", 2., 3., 1.)]);
        let e = PanelLayout::new(&["x"], &["t"], &["x"]).expand(&obs).unwrap();
        assert_eq!(e.feature_names(), ["x", "t", "x:t"]);
        assert_eq!(e.features()[(0, 2)], 6.0);
    }
}
