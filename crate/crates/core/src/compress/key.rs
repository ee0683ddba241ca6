//! Canonical row keys and the group accumulator shared by every
//! feature-keyed compression.

use std::cmp::Ordering;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::model::{SuffStatsTable, TableKind, WeightKind, WeightedSums};
use crate::error::Result;

/// Appends the canonical little-endian encoding of `values`. Negative zero is
/// folded into positive zero; every other bit pattern is kept as is.
pub(crate) fn encode_into(values: impl IntoIterator<Item = f64>, buf: &mut Vec<u8>) {
    for v in values {
        let v = if v == 0.0 { 0.0 } else { v };
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn canonical_eq(a: f64, b: f64) -> bool {
    a == b || a.to_bits() == b.to_bits()
}

/// Lexicographic order on numeric rows, consistent with [`encode_into`]
/// equality.
pub(crate) fn cmp_values(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let x = if *x == 0.0 { 0.0 } else { *x };
        let y = if *y == 0.0 { 0.0 } else { *y };
        match x.total_cmp(&y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Per-group running sums, in first-appearance order. Rows are stored
/// row-major and only reshaped into matrices at [`Accumulator::finish`].
pub(crate) struct Accumulator {
    p: usize,
    extra: usize,
    o: usize,
    with_sq: bool,
    weighted: Option<WeightKind>,
    keyed_by_cluster: bool,
    index: HashMap<Vec<u8>, usize>,
    buf: Vec<u8>,
    features: Vec<f64>,
    extra_key: Vec<f64>,
    clusters: Vec<String>,
    count: Vec<u64>,
    y_sum: Vec<f64>,
    y_sq: Vec<f64>,
    w_sum: Vec<f64>,
    w2_sum: Vec<f64>,
    wy: Vec<f64>,
    wy2: Vec<f64>,
    w2y: Vec<f64>,
    w2y2: Vec<f64>,
}

/// Statistics contributed to a group: either a raw row or an already
/// aggregated group from another table.
pub(crate) struct Contribution<'a> {
    pub count: u64,
    pub y_sum: &'a [f64],
    pub y_sq: Option<&'a [f64]>,
    pub weighted: Option<WeightedContribution<'a>>,
}

pub(crate) struct WeightedContribution<'a> {
    pub w: f64,
    pub w2: f64,
    pub wy: &'a [f64],
    pub wy2: &'a [f64],
    pub w2y: &'a [f64],
    pub w2y2: &'a [f64],
}

impl Accumulator {
    pub fn new(
        p: usize,
        extra: usize,
        o: usize,
        with_sq: bool,
        weighted: Option<WeightKind>,
        keyed_by_cluster: bool,
    ) -> Self {
        Accumulator {
            p,
            extra,
            o,
            with_sq,
            weighted,
            keyed_by_cluster,
            index: HashMap::new(),
            buf: Vec::with_capacity(8 * (p + extra) + 16),
            features: Vec::new(),
            extra_key: Vec::new(),
            clusters: Vec::new(),
            count: Vec::new(),
            y_sum: Vec::new(),
            y_sq: Vec::new(),
            w_sum: Vec::new(),
            w2_sum: Vec::new(),
            wy: Vec::new(),
            wy2: Vec::new(),
            w2y: Vec::new(),
            w2y2: Vec::new(),
        }
    }

    /// Finds or creates the group for `(features, extra, cluster)`.
    fn slot<F, E>(&mut self, features: F, extra: E, cluster: Option<&str>) -> usize
    where
        F: Iterator<Item = f64> + Clone,
        E: Iterator<Item = f64> + Clone,
    {
        self.buf.clear();
        encode_into(features.clone(), &mut self.buf);
        encode_into(extra.clone(), &mut self.buf);
        if let Some(c) = cluster {
            self.buf.extend_from_slice(c.as_bytes());
        }
        if let Some(&g) = self.index.get(self.buf.as_slice()) {
            return g;
        }
        let g = self.count.len();
        self.index.insert(self.buf.clone(), g);
        self.features.extend(features);
        self.extra_key.extend(extra);
        if self.keyed_by_cluster {
            self.clusters.push(cluster.unwrap_or_default().to_owned());
        }
        self.count.push(0);
        let o = self.o;
        self.y_sum.resize(self.y_sum.len() + o, 0.0);
        if self.with_sq {
            self.y_sq.resize(self.y_sq.len() + o, 0.0);
        }
        if self.weighted.is_some() {
            self.w_sum.push(0.0);
            self.w2_sum.push(0.0);
            for v in [&mut self.wy, &mut self.wy2, &mut self.w2y, &mut self.w2y2] {
                v.resize(v.len() + o, 0.0);
            }
        }
        g
    }

    pub fn add<F, E>(&mut self, features: F, extra: E, cluster: Option<&str>, c: Contribution<'_>)
    where
        F: Iterator<Item = f64> + Clone,
        E: Iterator<Item = f64> + Clone,
    {
        let g = self.slot(features, extra, cluster);
        let o = self.o;
        self.count[g] += c.count;
        add_to(&mut self.y_sum[g * o..(g + 1) * o], c.y_sum);
        if self.with_sq {
            if let Some(sq) = c.y_sq {
                add_to(&mut self.y_sq[g * o..(g + 1) * o], sq);
            }
        }
        if let Some(w) = c.weighted {
            self.w_sum[g] += w.w;
            self.w2_sum[g] += w.w2;
            add_to(&mut self.wy[g * o..(g + 1) * o], w.wy);
            add_to(&mut self.wy2[g * o..(g + 1) * o], w.wy2);
            add_to(&mut self.w2y[g * o..(g + 1) * o], w.w2y);
            add_to(&mut self.w2y2[g * o..(g + 1) * o], w.w2y2);
        }
    }

    /// Orders groups by (features, extra key, cluster label) and emits the
    /// table.
    pub fn finish(
        self,
        kind: TableKind,
        feature_names: Vec<String>,
        outcome_names: Vec<String>,
    ) -> Result<SuffStatsTable> {
        let (p, e, o) = (self.p, self.extra, self.o);
        let g = self.count.len();
        let mut order: Vec<usize> = (0..g).collect();
        order.sort_by(|&a, &b| {
            cmp_values(&self.features[a * p..(a + 1) * p], &self.features[b * p..(b + 1) * p])
                .then_with(|| {
                    cmp_values(
                        &self.extra_key[a * e..(a + 1) * e],
                        &self.extra_key[b * e..(b + 1) * e],
                    )
                })
                .then_with(|| {
                    if self.keyed_by_cluster {
                        self.clusters[a].cmp(&self.clusters[b])
                    } else {
                        Ordering::Equal
                    }
                })
        });
        let gather = |src: &[f64], width: usize| {
            DMatrix::from_fn(g, width, |r, c| src[order[r] * width + c])
        };
        let features = gather(&self.features, p);
        let y_sum = gather(&self.y_sum, o);
        let y_sq = self.with_sq.then(|| gather(&self.y_sq, o));
        let count = order.iter().map(|&i| self.count[i]).collect();
        let clusters = self
            .keyed_by_cluster
            .then(|| order.iter().map(|&i| self.clusters[i].clone()).collect());
        let weighted = self.weighted.map(|kind| WeightedSums {
            kind,
            w_sum: DVector::from_iterator(g, order.iter().map(|&i| self.w_sum[i])),
            w2_sum: DVector::from_iterator(g, order.iter().map(|&i| self.w2_sum[i])),
            wy_sum: gather(&self.wy, o),
            wy_sq_sum: gather(&self.wy2, o),
            w2y_sum: gather(&self.w2y, o),
            w2y_sq_sum: gather(&self.w2y2, o),
        });
        SuffStatsTable::from_parts(
            kind,
            feature_names,
            outcome_names,
            features,
            y_sum,
            y_sq,
            count,
            clusters,
            weighted,
        )
    }
}

fn add_to(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
