//! CSV persistence for [`SuffStatsTable`].
//!
//! Layout: feature columns, then `<y>__sum` and `<y>__sumsq` per outcome,
//! then `__count`. Weighted tables append `__wsum_freq` or
//! `__wsum_analytic`, `__w2sum`, and per outcome `<y>__wsum_y`,
//! `<y>__wsum_ysq`, `<y>__w2sum_y`, `<y>__w2sum_ysq`. A cluster-keyed table
//! ends with `__cluster`. Group-means tables omit every `__sumsq` column.
//!
//! Floats are written as the shortest decimal that parses back to the same
//! bits, so a write/read round trip is exact.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{SuffStatsTable, TableKind, WeightKind, WeightedSums};

const COUNT: &str = "__count";
const CLUSTER: &str = "__cluster";
const W2SUM: &str = "__w2sum";

fn wsum_column(kind: WeightKind) -> String {
    format!("__wsum_{}", kind.as_str())
}

/// Column layout of a table, from which the header is derived.
#[derive(Debug, PartialEq)]
struct Layout {
    features: Vec<String>,
    outcomes: Vec<String>,
    with_sq: bool,
    weighted: Option<WeightKind>,
    clustered: bool,
}

impl Layout {
    fn header(&self) -> Vec<String> {
        let mut h = self.features.clone();
        for y in &self.outcomes {
            h.push(format!("{y}__sum"));
            if self.with_sq {
                h.push(format!("{y}__sumsq"));
            }
        }
        h.push(COUNT.into());
        if let Some(kind) = self.weighted {
            h.push(wsum_column(kind));
            h.push(W2SUM.into());
            for y in &self.outcomes {
                for suffix in ["wsum_y", "wsum_ysq", "w2sum_y", "w2sum_ysq"] {
                    h.push(format!("{y}__{suffix}"));
                }
            }
        }
        if self.clustered {
            h.push(CLUSTER.into());
        }
        h
    }

    /// Infers the layout from a header, then insists the header is exactly
    /// the one that layout would produce.
    fn parse(header: &[String]) -> Result<Self> {
        let first_stat = header
            .iter()
            .position(|h| h.ends_with("__sum") || h == COUNT)
            .ok_or_else(|| Error::SchemaMismatch(format!("no `{COUNT}` column")))?;
        if !header.iter().any(|h| h == COUNT) {
            return Err(Error::SchemaMismatch(format!("no `{COUNT}` column")));
        }
        let features = header[..first_stat].to_vec();
        let outcomes: Vec<String> = header
            .iter()
            .filter_map(|h| h.strip_suffix("__sum"))
            .filter(|y| !y.is_empty())
            .map(str::to_owned)
            .collect();
        let with_sq = header.iter().any(|h| h.ends_with("__sumsq"));
        let weighted = [WeightKind::Frequency, WeightKind::Analytic]
            .into_iter()
            .find(|&k| header.contains(&wsum_column(k)));
        let layout = Layout {
            features,
            outcomes,
            with_sq,
            weighted,
            clustered: header.iter().any(|h| h == CLUSTER),
        };
        let expected = layout.header();
        if expected != header {
            return Err(Error::SchemaMismatch(format!(
                "unexpected column layout; expected `{}`",
                expected.join(",")
            )));
        }
        Ok(layout)
    }
}

/// Shortest round-trip decimal, switching to exponent form for very large or
/// small magnitudes.
fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

/// Writes `table` to `path`.
pub fn write_suffstats(path: impl AsRef<Path>, table: &SuffStatsTable) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_suffstats_to(std::io::BufWriter::new(file), table)
}

pub fn write_suffstats_to<W: Write>(writer: W, table: &SuffStatsTable) -> Result<()> {
    if table.kind == TableKind::FrequencyWeights {
        return Err(Error::Unsupported(
            "frequency-weight tables are keyed on outcomes and have no file format".into(),
        ));
    }
    let layout = Layout {
        features: table.feature_names.clone(),
        outcomes: table.outcome_names.clone(),
        with_sq: table.y_sq_sum.is_some(),
        weighted: table.weighted.as_ref().map(|w| w.kind),
        clustered: table.clusters.is_some(),
    };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(layout.header())?;
    let mut row: Vec<String> = Vec::new();
    for g in 0..table.num_groups() {
        row.clear();
        row.extend(table.features.row(g).iter().map(|v| fmt_float(*v)));
        for k in 0..table.o() {
            row.push(fmt_float(table.y_sum[(g, k)]));
            if let Some(sq) = &table.y_sq_sum {
                row.push(fmt_float(sq[(g, k)]));
            }
        }
        row.push(table.count[g].to_string());
        if let Some(ws) = &table.weighted {
            row.push(fmt_float(ws.w_sum[g]));
            row.push(fmt_float(ws.w2_sum[g]));
            for k in 0..table.o() {
                for m in [&ws.wy_sum, &ws.wy_sq_sum, &ws.w2y_sum, &ws.w2y_sq_sum] {
                    row.push(fmt_float(m[(g, k)]));
                }
            }
        }
        if let Some(c) = &table.clusters {
            row.push(c[g].clone());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_suffstats`].
pub fn read_suffstats(path: impl AsRef<Path>) -> Result<SuffStatsTable> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_suffstats_from(file)
}

pub fn read_suffstats_from<R: Read>(reader: R) -> Result<SuffStatsTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let layout = Layout::parse(&header)?;
    let (p, o) = (layout.features.len(), layout.outcomes.len());

    let mut features = Vec::new();
    let mut y_sum = Vec::new();
    let mut y_sq = Vec::new();
    let mut count = Vec::new();
    let mut w_sum = Vec::new();
    let mut w2_sum = Vec::new();
    let mut wblocks: [Vec<f64>; 4] = Default::default();
    let mut clusters = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |pos| pos.line() as usize);
        let mut col = 0usize;
        let mut next = || -> (usize, &str) {
            let i = col;
            col += 1;
            (i, record.get(i).unwrap_or(""))
        };
        let num = |(i, raw): (usize, &str)| -> Result<f64> {
            raw.parse::<f64>().map_err(|_| Error::Parse {
                line,
                column: header[i].clone(),
                message: format!("`{raw}` is not a number"),
            })
        };
        for _ in 0..p {
            features.push(num(next())?);
        }
        for _ in 0..o {
            y_sum.push(num(next())?);
            if layout.with_sq {
                y_sq.push(num(next())?);
            }
        }
        let (i, raw) = next();
        count.push(raw.parse::<u64>().map_err(|_| Error::Parse {
            line,
            column: header[i].clone(),
            message: format!("`{raw}` is not a count"),
        })?);
        if layout.weighted.is_some() {
            w_sum.push(num(next())?);
            w2_sum.push(num(next())?);
            for _ in 0..o {
                for block in wblocks.iter_mut() {
                    block.push(num(next())?);
                }
            }
        }
        if layout.clustered {
            clusters.push(next().1.to_owned());
        }
    }
    let g = count.len();
    let by_row = |v: &[f64], cols: usize| DMatrix::from_row_slice(g, cols, v);
    let weighted = layout.weighted.map(|kind| {
        let [wy, wy2, w2y, w2y2] = &wblocks;
        WeightedSums {
            kind,
            w_sum: DVector::from_vec(w_sum),
            w2_sum: DVector::from_vec(w2_sum),
            wy_sum: by_row(wy, o),
            wy_sq_sum: by_row(wy2, o),
            w2y_sum: by_row(w2y, o),
            w2y_sq_sum: by_row(w2y2, o),
        }
    });
    let kind = if layout.with_sq || o == 0 {
        TableKind::SufficientStatistics
    } else {
        TableKind::GroupMeans
    };
    SuffStatsTable::from_parts(
        kind,
        layout.features,
        layout.outcomes,
        by_row(&features, p),
        by_row(&y_sum, o),
        (kind == TableKind::SufficientStatistics).then(|| by_row(&y_sq, o)),
        count,
        layout.clustered.then_some(clusters),
        weighted,
    )
    .map_err(|e| match e {
        Error::DimensionMismatch(m) | Error::InvalidArgument(m) => Error::SchemaMismatch(m),
        other => other,
    })
}
