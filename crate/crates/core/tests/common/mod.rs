//! Seeded random instances shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use suffreg::compress::compress_suffstats;
use suffreg::oracle::oracle_ols;
use suffreg::{ClusterLabels, ObservationSet, WeightKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

const ALPHABET: [f64; 6] = [-1.25, 0.0, 0.5, 1.0, 2.75, 4.0];

/// A column alphabet of 2 or 3 distinct values.
fn alphabet(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let size = rng.random_range(2..=3);
    let mut values = ALPHABET.to_vec();
    values.shuffle(rng);
    values.truncate(size);
    values
}

/// Intercept plus `p - 1` discrete columns, outcomes with noise that grows
/// with the first feature, and random cluster labels.
fn draw(rng: &mut ChaCha8Rng, n: usize, p: usize, o: usize, clusters: usize) -> ObservationSet {
    let alphabets: Vec<Vec<f64>> = (1..p).map(|_| alphabet(rng)).collect();
    let mut m = DMatrix::from_element(n, p, 1.0);
    for i in 0..n {
        for (j, a) in alphabets.iter().enumerate() {
            m[(i, j + 1)] = a[rng.random_range(0..a.len())];
        }
    }
    let beta = DMatrix::from_fn(p, o, |_, _| rng.random_range(-2.0..2.0));
    let mut y = &m * &beta;
    let effects: Vec<f64> = (0..clusters).map(|_| normal(rng)).collect();
    let cluster_of: Vec<usize> = (0..n).map(|_| rng.random_range(0..clusters)).collect();
    for i in 0..n {
        let scale = 0.5 + if p > 1 { m[(i, 1)].abs() } else { 0.0 };
        for k in 0..o {
            y[(i, k)] += scale * normal(rng) + 0.5 * effects[cluster_of[i]];
        }
    }
    let mut feature_names = vec!["intercept".to_owned()];
    feature_names.extend((1..p).map(|j| format!("x{j}")));
    let outcome_names = (1..=o).map(|k| format!("y{k}")).collect();
    let labels = cluster_of.iter().map(|c| format!("c{c}"));
    ObservationSet::new(m, feature_names, y, outcome_names)
        .unwrap()
        .with_clusters(ClusterLabels::from_labels(labels))
        .unwrap()
}

/// Full-rank clustered instance with n ≤ 500, p ≤ 8 and G < n.
pub fn random_instance(rng: &mut ChaCha8Rng) -> ObservationSet {
    loop {
        let n = rng.random_range(60..=500);
        let p = rng.random_range(1..=8);
        let o = rng.random_range(1..=2);
        let c = rng.random_range(3..=25);
        let obs = draw(rng, n, p, o, c);
        let g = compress_suffstats(&obs, false).unwrap().num_groups();
        if g < n && g > p && oracle_ols(&obs).is_ok() {
            return obs;
        }
    }
}

/// As [`random_instance`] with row weights of the given kind: integers
/// 1..=4 for frequency weights, uniform on [0.2, 3) for analytic ones.
pub fn random_weighted_instance(rng: &mut ChaCha8Rng, kind: WeightKind) -> ObservationSet {
    let obs = random_instance(rng);
    let w = (0..obs.n())
        .map(|_| match kind {
            WeightKind::Frequency => f64::from(rng.random_range(1u8..=4)),
            WeightKind::Analytic => rng.random_range(0.2..3.0),
        })
        .collect();
    obs.with_weights(w, kind).unwrap()
}

fn shuffled(rng: &mut ChaCha8Rng, obs: &ObservationSet, order: Option<&[f64]>) -> (ObservationSet, Option<Vec<f64>>) {
    let mut perm: Vec<usize> = (0..obs.n()).collect();
    perm.shuffle(rng);
    let order = order.map(|o| perm.iter().map(|&i| o[i]).collect());
    (obs.select_rows(&perm), order)
}

/// Clusters whose feature blocks are drawn from a small pool of templates of
/// varying length, so several clusters share a block. Rows are shuffled;
/// the returned order key restores each cluster's block order.
pub fn between_instance(rng: &mut ChaCha8Rng) -> (ObservationSet, Vec<f64>) {
    loop {
        let p = rng.random_range(1..=3);
        let alphabets: Vec<Vec<f64>> = (1..p).map(|_| alphabet(rng)).collect();
        let templates: Vec<DMatrix<f64>> = (0..rng.random_range(2..=5))
            .map(|_| {
                let t = rng.random_range(1..=4);
                DMatrix::from_fn(t, p, |_, j| {
                    if j == 0 {
                        1.0
                    } else {
                        let a = &alphabets[j - 1];
                        a[rng.random_range(0..a.len())]
                    }
                })
            })
            .collect();
        let c_count = rng.random_range(8..=30);
        let (mut rows, mut ys, mut labels, mut order) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for c in 0..c_count {
            let block = &templates[rng.random_range(0..templates.len())];
            let effect = normal(rng);
            for t in 0..block.nrows() {
                let row: Vec<f64> = block.row(t).iter().copied().collect();
                ys.push(row.iter().sum::<f64>() + effect + normal(rng));
                rows.extend(row);
                labels.push(format!("k{c}"));
                order.push(t as f64);
            }
        }
        let n = labels.len();
        let mut names = vec!["intercept".to_owned()];
        names.extend((1..p).map(|j| format!("x{j}")));
        let obs = ObservationSet::new(
            DMatrix::from_row_slice(n, p, &rows),
            names,
            DMatrix::from_vec(n, 1, ys),
            vec!["y".into()],
        )
        .unwrap()
        .with_clusters(ClusterLabels::from_labels(labels))
        .unwrap();
        if oracle_ols(&obs).is_ok() && n > p {
            let (obs, order) = shuffled(rng, &obs, Some(&order));
            return (obs, order.unwrap());
        }
    }
}

/// Panel with static columns `intercept, s1[, s2]` and dynamic columns
/// `d1[, d2]`. Unbalanced unless `balanced`, in which case every cluster
/// sees the same ordered dynamic block over `periods` rows. Rows are
/// shuffled; the order key is the period.
pub fn panel_instance(
    rng: &mut ChaCha8Rng,
    clusters: usize,
    periods: usize,
    p_static: usize,
    p_dynamic: usize,
    balanced: bool,
) -> (ObservationSet, Vec<f64>) {
    let shared: DMatrix<f64> = DMatrix::from_fn(periods, p_dynamic, |t, j| {
        if j == 0 {
            (t + 1) as f64
        } else {
            ((t * 7 + 3) % 5) as f64 - 2.0
        }
    });
    let p = p_static + p_dynamic;
    let (mut rows, mut ys, mut labels, mut order) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for c in 0..clusters {
        let statics: Vec<f64> = (0..p_static)
            .map(|j| if j == 0 { 1.0 } else { f64::from(rng.random_range(0u8..=1)) })
            .collect();
        let effect = normal(rng);
        let sd = 1.0 + statics.iter().sum::<f64>();
        let t_c = if balanced { periods } else { rng.random_range(1..=periods) };
        for t in 0..t_c {
            let dynamic: Vec<f64> = (0..p_dynamic)
                .map(|j| {
                    if balanced {
                        shared[(t, j)]
                    } else {
                        f64::from(rng.random_range(-2i8..=3))
                    }
                })
                .collect();
            let signal = 0.5 * statics.iter().sum::<f64>()
                + dynamic.iter().sum::<f64>() * (0.1 + 0.2 * statics.get(1).copied().unwrap_or(0.0));
            ys.push(signal + effect + sd * normal(rng));
            rows.extend(statics.iter().chain(&dynamic).copied());
            labels.push(format!("u{c}"));
            order.push(t as f64);
        }
    }
    let n = labels.len();
    let mut names = vec!["intercept".to_owned()];
    names.extend((1..p_static).map(|j| format!("s{j}")));
    names.extend((1..=p_dynamic).map(|j| format!("d{j}")));
    let obs = ObservationSet::new(
        DMatrix::from_row_slice(n, p, &rows),
        names,
        DMatrix::from_vec(n, 1, ys),
        vec!["y".into()],
    )
    .unwrap()
    .with_clusters(ClusterLabels::from_labels(labels))
    .unwrap();
    let (obs, order) = shuffled(rng, &obs, Some(&order));
    (obs, order.unwrap())
}

pub fn static_names(p_static: usize) -> Vec<String> {
    let mut names = vec!["intercept".to_owned()];
    names.extend((1..p_static).map(|j| format!("s{j}")));
    names
}

/// Largest absolute entry difference over the largest absolute entry of `b`.
pub fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    suffreg::oracle::max_rel_diff(a, b)
}

/// [`rel`] maximized over paired lists of matrices.
pub fn rel_all(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| rel(x, y)).fold(0.0, f64::max)
}
