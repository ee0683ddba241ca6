//! Timing of compressed fits against the row-level oracle.

use std::time::Instant;

use serde_json::{Map, Value};

use crate::compress::{compress_between_cluster, compress_panel, compress_suffstats, PanelLayout};
use crate::error::{Error, Result};
use crate::estimate::{estimate, fit, CompressedData};
use crate::io::json::float;
use crate::io::synth::gen_panel;
use crate::model::{ClusterStatsTable, ClusterStrategy, CovarianceSpec, PanelStatsTable, SuffStatsTable};
use crate::oracle::{oracle_ols, oracle_sandwich};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub users: usize,
    pub periods: usize,
    pub p_static: usize,
    pub reps: usize,
    pub covariance: CovarianceSpec,
    pub seed: u64,
}

/// Median and spread of one timed stage, in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub samples: Vec<f64>,
}

impl Timing {
    pub fn median(&self) -> f64 {
        let mut s = self.samples.clone();
        s.sort_by(f64::total_cmp);
        let m = s.len() / 2;
        if s.len() % 2 == 1 {
            s[m]
        } else {
            0.5 * (s[m - 1] + s[m])
        }
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("median".into(), float(self.median()));
        if self.samples.len() > 1 {
            let min = self.samples.iter().copied().fold(f64::INFINITY, f64::min);
            let max = self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            m.insert("min".into(), float(min));
            m.insert("max".into(), float(max));
        }
        Value::Object(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub n: u64,
    pub groups: usize,
    pub compress: Timing,
    /// Full compressed fit, covariance included, excluding compression.
    pub fit: Timing,
    /// Bread, coefficients and meat only.
    pub estimator: Timing,
    pub oracle: Timing,
}

impl BenchReport {
    /// Oracle time over compressed-fit time. Not clamped: values below 1 mean
    /// the oracle was faster.
    pub fn speedup_fit(&self) -> f64 {
        self.oracle.median() / self.fit.median()
    }

    pub fn speedup_estimator(&self) -> f64 {
        self.oracle.median() / self.estimator.median()
    }

    pub fn speedup_with_compression(&self) -> f64 {
        self.oracle.median() / (self.compress.median() + self.fit.median())
    }

    pub fn to_json(&self) -> Value {
        let c = &self.config;
        let mut m = Map::new();
        m.insert("users".into(), Value::from(c.users as u64));
        m.insert("periods".into(), Value::from(c.periods as u64));
        m.insert("p_static".into(), Value::from(c.p_static as u64));
        m.insert("reps".into(), Value::from(c.reps as u64));
        m.insert("covariance_spec".into(), Value::from(c.covariance.to_string()));
        m.insert("seed".into(), Value::from(c.seed));
        m.insert("n".into(), Value::from(self.n));
        m.insert("G".into(), Value::from(self.groups as u64));
        let mut t = Map::new();
        t.insert("compress".into(), self.compress.to_json());
        t.insert("fit".into(), self.fit.to_json());
        t.insert("estimator".into(), self.estimator.to_json());
        t.insert("oracle".into(), self.oracle.to_json());
        m.insert("timing_ms".into(), Value::Object(t));
        m.insert("speedup_fit".into(), float(self.speedup_fit()));
        m.insert("speedup_estimator".into(), float(self.speedup_estimator()));
        m.insert("speedup_with_compression".into(), float(self.speedup_with_compression()));
        Value::Object(m)
    }
}

enum Table {
    Suff(SuffStatsTable),
    Between(ClusterStatsTable),
    Panel(PanelStatsTable),
}

impl Table {
    fn data(&self) -> CompressedData<'_> {
        match self {
            Table::Suff(t) => t.into(),
            Table::Between(t) => t.into(),
            Table::Panel(t) => t.into(),
        }
    }

    fn groups(&self) -> usize {
        match self {
            Table::Suff(t) => t.num_groups(),
            Table::Between(t) => t.groups().len(),
            Table::Panel(t) => t.num_clusters(),
        }
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Generates a panel with [`gen_panel`] (plus an intercept), then times
/// compression, the compressed fit, its estimator stage, and the oracle on
/// the uncompressed rows, `reps` times each.
pub fn run_bench(config: BenchConfig) -> Result<BenchReport> {
    if config.reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let panel = gen_panel(config.users, config.periods, config.p_static, config.seed)?;
    let obs = panel.observations.with_intercept();
    let mut static_cols = vec!["intercept".to_owned()];
    static_cols.extend((1..=config.p_static).map(|j| format!("s{j}")));
    let layout = PanelLayout::from_static(&obs, &static_cols, &[]);
    let spec = config.covariance;

    let compress = || -> Result<Table> {
        Ok(match spec {
            CovarianceSpec::Homoskedastic | CovarianceSpec::HeteroskedasticEhw => {
                Table::Suff(compress_suffstats(&obs, false)?)
            }
            CovarianceSpec::ClusterRobust(ClusterStrategy::WithinCluster) => {
                Table::Suff(compress_suffstats(&obs, true)?)
            }
            CovarianceSpec::ClusterRobust(ClusterStrategy::BetweenCluster) => {
                Table::Between(compress_between_cluster(&obs, Some(&panel.time))?)
            }
            CovarianceSpec::ClusterRobust(_) => Table::Panel(compress_panel(&obs, &layout, Some(&panel.time))?),
        })
    };
    let oracle_obs = match spec {
        CovarianceSpec::ClusterRobust(ClusterStrategy::StaticDynamic | ClusterStrategy::BalancedPanel) => {
            layout.expand(&obs)?
        }
        _ => obs.clone(),
    };

    let mut timings = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut groups = 0;
    for _ in 0..config.reps {
        let start = Instant::now();
        let table = compress()?;
        timings[0].push(elapsed_ms(start));
        groups = table.groups();

        let start = Instant::now();
        let result = fit(table.data(), spec)?;
        timings[1].push(elapsed_ms(start));
        std::hint::black_box(&result);

        let start = Instant::now();
        let est = estimate(table.data(), spec)?;
        timings[2].push(elapsed_ms(start));
        std::hint::black_box(&est);

        let start = Instant::now();
        let of = oracle_ols(&oracle_obs)?;
        let v = oracle_sandwich(&oracle_obs, &of.residuals, spec)?;
        timings[3].push(elapsed_ms(start));
        std::hint::black_box(&v);
    }
    let [compress, fit, estimator, oracle] = timings.map(|samples| Timing { samples });
    Ok(BenchReport {
        config,
        n: obs.n() as u64,
        groups,
        compress,
        fit,
        estimator,
        oracle,
    })
}
