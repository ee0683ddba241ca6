use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{ClusterLabels, CovarianceSpec, ObservationSet, WeightKind};

/// Column roles and estimator options for one job.
#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub input: PathBuf,
    pub features: Vec<String>,
    pub outcomes: Vec<String>,
    pub weights: Option<(String, WeightKind)>,
    pub cluster: Option<String>,
    /// Orders rows inside each cluster for the between-cluster and panel paths.
    pub order: Option<String>,
    /// Static columns of a static/dynamic split; the other features are dynamic.
    pub static_cols: Option<Vec<String>>,
    /// Static columns interacted with every dynamic column.
    pub interactions: Vec<String>,
    pub covariance: CovarianceSpec,
    /// `(column, k)`: replace the column with k quantile-bin dummies.
    pub bins: Vec<(String, usize)>,
    pub output: Option<PathBuf>,
}

impl JobConfig {
    pub fn new(input: impl Into<PathBuf>, features: Vec<String>, outcomes: Vec<String>) -> Self {
        JobConfig {
            input: input.into(),
            features,
            outcomes,
            weights: None,
            cluster: None,
            order: None,
            static_cols: None,
            interactions: Vec::new(),
            covariance: CovarianceSpec::Homoskedastic,
            bins: Vec::new(),
            output: None,
        }
    }

    /// Checks that role assignments are disjoint and internally consistent.
    pub fn check(&self) -> Result<()> {
        let mut seen: HashMap<&str, &str> = HashMap::new();
        let roles = self
            .features
            .iter()
            .map(|c| (c.as_str(), "feature"))
            .chain(self.outcomes.iter().map(|c| (c.as_str(), "outcome")))
            .chain(self.weights.iter().map(|(c, _)| (c.as_str(), "weight")));
        for (col, role) in roles {
            if let Some(prev) = seen.insert(col, role) {
                return Err(Error::InvalidArgument(format!(
                    "column `{col}` is used as both {prev} and {role}"
                )));
            }
        }
        if self.features.is_empty() && self.outcomes.is_empty() {
            return Err(Error::InvalidArgument("no feature or outcome columns given".into()));
        }
        for c in self.static_cols.iter().flatten().chain(&self.interactions) {
            if !self.features.contains(c) {
                return Err(Error::InvalidArgument(format!("static column `{c}` is not a feature")));
            }
        }
        for (c, _) in &self.bins {
            if !self.features.contains(c) {
                return Err(Error::InvalidArgument(format!("binned column `{c}` is not a feature")));
            }
        }
        Ok(())
    }
}

/// Rows read from a CSV file, plus the within-cluster order column if one
/// was requested.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub observations: ObservationSet,
    pub order: Option<Vec<f64>>,
}

/// Reads the columns named in `config` from a headed CSV file.
pub fn read_csv(path: impl AsRef<Path>, config: &JobConfig) -> Result<ObservationSet> {
    Ok(read_csv_full(path, config)?.observations)
}

/// As [`read_csv`], also returning the order column.
pub fn read_csv_full(path: impl AsRef<Path>, config: &JobConfig) -> Result<LoadedData> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv_from(file, config)
}

pub fn read_csv_from<R: Read>(reader: R, config: &JobConfig) -> Result<LoadedData> {
    config.check()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let position = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let feat_idx = config.features.iter().map(|c| position(c)).collect::<Result<Vec<_>>>()?;
    let out_idx = config.outcomes.iter().map(|c| position(c)).collect::<Result<Vec<_>>>()?;
    let weight_idx = config.weights.as_ref().map(|(c, _)| position(c)).transpose()?;
    let cluster_idx = config.cluster.as_deref().map(position).transpose()?;
    let order_idx = config.order.as_deref().map(position).transpose()?;

    let (p, o) = (feat_idx.len(), out_idx.len());
    let mut features = Vec::new();
    let mut outcomes = Vec::new();
    let mut weights = Vec::new();
    let mut clusters = Vec::new();
    let mut order = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |pos| pos.line() as usize);
        let number = |i: usize| -> Result<f64> {
            let raw = record.get(i).unwrap_or("").trim();
            if raw.is_empty() {
                return Err(Error::Parse {
                    line,
                    column: header[i].to_owned(),
                    message: "missing value".into(),
                });
            }
            raw.parse::<f64>().map_err(|_| Error::Parse {
                line,
                column: header[i].to_owned(),
                message: format!("`{raw}` is not a number"),
            })
        };
        for &i in &feat_idx {
            features.push(number(i)?);
        }
        for &i in &out_idx {
            outcomes.push(number(i)?);
        }
        if let Some(i) = weight_idx {
            weights.push(number(i)?);
        }
        if let Some(i) = order_idx {
            order.push(number(i)?);
        }
        if let Some(i) = cluster_idx {
            clusters.push(record.get(i).unwrap_or("").to_owned());
        }
    }
    let n = features.len().checked_div(p).unwrap_or(outcomes.len() / o.max(1));
    let mut obs = ObservationSet::new(
        DMatrix::from_row_slice(n, p, &features),
        config.features.clone(),
        DMatrix::from_row_slice(n, o, &outcomes),
        config.outcomes.clone(),
    )?;
    if let Some((_, kind)) = &config.weights {
        obs = obs.with_weights(weights, *kind)?;
    }
    if cluster_idx.is_some() {
        obs = obs.with_clusters(ClusterLabels::from_labels(clusters))?;
    }
    Ok(LoadedData {
        observations: obs,
        order: order_idx.map(|_| order),
    })
}
