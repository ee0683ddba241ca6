use crate::compress::key::{Accumulator, Contribution, WeightedContribution};
use crate::error::{Error, Result};
use crate::model::{ObservationSet, SuffStatsTable, TableKind};

/// Groups rows by feature vector (and cluster label when
/// `include_cluster_key`) and records Σy, Σy², the count, and, for weighted
/// input, the w and w² sums.
pub fn compress_suffstats(obs: &ObservationSet, include_cluster_key: bool) -> Result<SuffStatsTable> {
    compress_rows(obs, include_cluster_key, TableKind::SufficientStatistics)
}

/// Frequency-weight compression: groups on the feature row and the outcome
/// row jointly. Adding an outcome changes the grouping.
pub fn compress_fweights(obs: &ObservationSet) -> Result<SuffStatsTable> {
    compress_rows(obs, false, TableKind::FrequencyWeights)
}

/// Group-mean compression: same grouping as [`compress_suffstats`] but without
/// sums of squares, so the result cannot support a lossless variance.
pub fn compress_group_means(obs: &ObservationSet) -> Result<SuffStatsTable> {
    if obs.weights().is_some() {
        return Err(Error::Unsupported("weights with group-means compression".into()));
    }
    compress_rows(obs, false, TableKind::GroupMeans)
}

fn compress_rows(obs: &ObservationSet, include_cluster_key: bool, kind: TableKind) -> Result<SuffStatsTable> {
    obs.validate()?;
    let clusters = if include_cluster_key {
        Some(obs.clusters().ok_or(Error::MissingClusters)?)
    } else {
        None
    };
    let (p, o) = (obs.p(), obs.o());
    let extra = if kind == TableKind::FrequencyWeights { o } else { 0 };
    let with_sq = kind != TableKind::GroupMeans;
    let weights = obs.weights();
    let mut acc = Accumulator::new(
        p,
        extra,
        o,
        with_sq,
        weights.map(|w| w.kind),
        include_cluster_key,
    );
    let m = obs.features();
    let y = obs.outcomes();
    let mut ys = vec![0.0; o];
    let mut ysq = vec![0.0; o];
    let mut wy = vec![0.0; o];
    let mut wy2 = vec![0.0; o];
    let mut w2y = vec![0.0; o];
    let mut w2y2 = vec![0.0; o];
    for i in 0..obs.n() {
        for k in 0..o {
            let v = y[(i, k)];
            ys[k] = v;
            ysq[k] = v * v;
        }
        let weighted = weights.map(|w| {
            let wi = w.values[i];
            let wi2 = wi * wi;
            for k in 0..o {
                wy[k] = wi * ys[k];
                wy2[k] = wi * ysq[k];
                w2y[k] = wi2 * ys[k];
                w2y2[k] = wi2 * ysq[k];
            }
            (wi, wi2)
        });
        let features = (0..p).map(|j| m[(i, j)]);
        let outcome_key = (0..extra).map(|k| y[(i, k)]);
        acc.add(
            features,
            outcome_key,
            clusters.map(|c| c.label_of_row(i)),
            Contribution {
                count: 1,
                y_sum: &ys,
                y_sq: Some(&ysq),
                weighted: weighted.map(|(w, w2)| WeightedContribution {
                    w,
                    w2,
                    wy: &wy,
                    wy2: &wy2,
                    w2y: &w2y,
                    w2y2: &w2y2,
                }),
            },
        );
    }
    acc.finish(kind, obs.feature_names().to_vec(), obs.outcome_names().to_vec())
}

/// Combines two tables compressed from disjoint row sets. Groups with equal
/// keys have their statistics summed.
pub fn merge_suffstats(a: &SuffStatsTable, b: &SuffStatsTable) -> Result<SuffStatsTable> {
    if a.feature_names != b.feature_names {
        return Err(Error::SchemaMismatch("feature columns differ".into()));
    }
    if a.outcome_names != b.outcome_names {
        return Err(Error::SchemaMismatch("outcome columns differ".into()));
    }
    if a.kind != b.kind {
        return Err(Error::SchemaMismatch("tables come from different compressions".into()));
    }
    if a.kind == TableKind::FrequencyWeights {
        return Err(Error::SchemaMismatch(
            "frequency-weight tables are keyed on outcomes and cannot be merged".into(),
        ));
    }
    if a.clusters.is_some() != b.clusters.is_some() {
        return Err(Error::SchemaMismatch("cluster key presence differs".into()));
    }
    if a.weighted.as_ref().map(|w| w.kind) != b.weighted.as_ref().map(|w| w.kind) {
        return Err(Error::SchemaMismatch("weighted blocks differ".into()));
    }
    regroup([a, b], a.clusters.is_some())
}

/// Drops the cluster column of a cluster-keyed table and re-deduplicates on
/// features alone.
pub fn drop_cluster_key(table: &SuffStatsTable) -> Result<SuffStatsTable> {
    regroup([table], false)
}

fn regroup<'a>(
    tables: impl IntoIterator<Item = &'a SuffStatsTable> + Clone,
    keep_cluster: bool,
) -> Result<SuffStatsTable> {
    let first = tables.clone().into_iter().next().expect("at least one table");
    let (p, o) = (first.p(), first.o());
    let with_sq = first.y_sq_sum.is_some();
    let mut acc = Accumulator::new(
        p,
        0,
        o,
        with_sq,
        first.weighted.as_ref().map(|w| w.kind),
        keep_cluster,
    );
    let row = |m: &nalgebra::DMatrix<f64>, g: usize| -> Vec<f64> { m.row(g).iter().copied().collect() };
    for t in tables.clone() {
        for g in 0..t.num_groups() {
            let ys = row(&t.y_sum, g);
            let ysq = t.y_sq_sum.as_ref().map(|m| row(m, g));
            let w = t.weighted.as_ref().map(|w| {
                (
                    w.w_sum[g],
                    w.w2_sum[g],
                    row(&w.wy_sum, g),
                    row(&w.wy_sq_sum, g),
                    row(&w.w2y_sum, g),
                    row(&w.w2y_sq_sum, g),
                )
            });
            let cluster = if keep_cluster {
                t.clusters.as_ref().map(|c| c[g].as_str())
            } else {
                None
            };
            acc.add(
                t.features.row(g).iter().copied(),
                std::iter::empty(),
                cluster,
                Contribution {
                    count: t.count[g],
                    y_sum: &ys,
                    y_sq: ysq.as_deref(),
                    weighted: w.as_ref().map(|(w, w2, wy, wy2, w2y, w2y2)| WeightedContribution {
                        w: *w,
                        w2: *w2,
                        wy,
                        wy2,
                        w2y,
                        w2y2,
                    }),
                },
            );
        }
    }
    acc.finish(first.kind, first.feature_names.clone(), first.outcome_names.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClusterLabels, WeightKind};
    use nalgebra::DMatrix;

    fn xy(rows: &[(f64, f64)]) -> ObservationSet {
        let n = rows.len();
        ObservationSet::new(
            DMatrix::from_iterator(n, 1, rows.iter().map(|r| r.0)),
            vec!["x".into()],
            DMatrix::from_iterator(n, 1, rows.iter().map(|r| r.1)),
            vec!["y".into()],
        )
        .unwrap()
    }

    #[test]
    fn sums_per_feature_value() {
        let t = compress_suffstats(&xy(&[(1., 1.), (1., 3.), (2., 5.)]), false).unwrap();
        assert_eq!(t.num_groups(), 2);
        assert_eq!(t.features().as_slice(), &[1.0, 2.0]);
        assert_eq!(t.y_sum().as_slice(), &[4.0, 5.0]);
        assert_eq!(t.y_sq_sum().unwrap().as_slice(), &[10.0, 25.0]);
        assert_eq!(t.count(), &[2, 1]);
    }

    #[test]
    fn identical_rows_collapse_to_one_group() {
        let t = compress_suffstats(&xy(&[(7., 1.); 9]), false).unwrap();
        assert_eq!(t.num_groups(), 1);
        assert_eq!(t.count(), &[9]);
    }

    #[test]
    fn empty_input_gives_empty_table() {
        let t = compress_suffstats(&xy(&[]), false).unwrap();
        assert_eq!(t.num_groups(), 0);
        assert_eq!(t.num_observations(), 0);
    }

    #[test]
    fn cluster_key_requires_labels() {
        assert_eq!(
            compress_suffstats(&xy(&[(1., 1.)]), true).unwrap_err(),
            Error::MissingClusters
        );
    }

    #[test]
    fn cluster_key_splits_groups() {
        let obs = xy(&[(1., 1.), (1., 3.), (1., 5.)])
            .with_clusters(ClusterLabels::from_labels(["a", "b", "a"]))
            .unwrap();
        let t = compress_suffstats(&obs, true).unwrap();
        assert_eq!(t.num_groups(), 2);
        assert_eq!(t.clusters().unwrap(), ["a", "b"]);
        assert_eq!(t.y_sum().as_slice(), &[6.0, 3.0]);
        let dropped = drop_cluster_key(&t).unwrap();
        assert_eq!(dropped.num_groups(), 1);
        assert_eq!(dropped.count(), &[3]);
    }

    #[test]
    fn fweights_key_on_outcome_too() {
        let t = compress_fweights(&xy(&[(1., 2.), (1., 2.), (1., 3.)])).unwrap();
        assert_eq!(t.num_groups(), 2);
        assert_eq!(t.count(), &[2, 1]);
        assert_eq!(t.y_sum().as_slice(), &[4.0, 3.0]);
        let unique = compress_fweights(&xy(&[(1., 0.1), (1., 0.2), (1., 0.3)])).unwrap();
        assert_eq!(unique.num_groups(), 3);
    }

    #[test]
    fn group_means_hide_sum_of_squares() {
        let t = compress_group_means(&xy(&[(1., 1.), (1., 3.)])).unwrap();
        assert_eq!(t.y_sum().as_slice(), &[4.0]);
        assert_eq!(t.count(), &[2]);
        assert_eq!(t.y_sq_sum().unwrap_err(), Error::UnavailableStatistic("sum of squares"));
        let single = compress_group_means(&xy(&[(3., 4.)])).unwrap();
        assert_eq!(single.features()[(0, 0)], 3.0);
        assert_eq!(single.y_sum()[(0, 0)], 4.0);
    }

    #[test]
    fn weighted_blocks_carry_w_and_w_squared() {
        let obs = xy(&[(1., 2.), (1., 4.)])
            .with_weights(vec![0.5, 2.0], WeightKind::Analytic)
            .unwrap();
        let t = compress_suffstats(&obs, false).unwrap();
        let w = t.weighted().unwrap();
        assert_eq!(w.w_sum[0], 2.5);
        assert_eq!(w.w2_sum[0], 4.25);
        assert_eq!(w.wy_sum[(0, 0)], 0.5 * 2.0 + 2.0 * 4.0);
        assert_eq!(w.wy_sq_sum[(0, 0)], 0.5 * 4.0 + 2.0 * 16.0);
        assert_eq!(w.w2y_sum[(0, 0)], 0.25 * 2.0 + 4.0 * 4.0);
        assert_eq!(w.w2y_sq_sum[(0, 0)], 0.25 * 4.0 + 4.0 * 16.0);
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let t = compress_suffstats(&xy(&[(2., 1.), (1., 3.), (2., 5.)]), false).unwrap();
        let empty = compress_suffstats(&xy(&[]), false).unwrap();
        assert_eq!(merge_suffstats(&t, &empty).unwrap(), t);
        assert_eq!(merge_suffstats(&empty, &t).unwrap(), t);
    }

    #[test]
    fn merge_rejects_schema_mismatch() {
        let a = compress_suffstats(&xy(&[(1., 1.)]), false).unwrap();
        let b = compress_suffstats(
            &ObservationSet::new(
                DMatrix::from_element(1, 1, 1.0),
                vec!["z".into()],
                DMatrix::from_element(1, 1, 1.0),
                vec!["y".into()],
            )
            .unwrap(),
            false,
        )
        .unwrap();
        assert!(matches!(merge_suffstats(&a, &b), Err(Error::SchemaMismatch(_))));
    }
}
