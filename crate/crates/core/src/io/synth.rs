//! Seeded synthetic panels for benchmarks and examples.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::io::json::float;
use crate::model::{ClusterLabels, ObservationSet};

/// Error structure of the generated outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Noise {
    /// Unit-variance Gaussian noise.
    #[default]
    Homoskedastic,
    /// Noise standard deviation 1 + Σ static features.
    Heteroskedastic,
}

/// How the panel was generated.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelMetadata {
    pub seed: u64,
    pub users: usize,
    pub periods: usize,
    /// Generating coefficients, intercept first, then static columns, then
    /// `time`.
    pub coefficients: Vec<(String, f64)>,
    pub random_effect_sd: f64,
    pub noise: Noise,
}

impl PanelMetadata {
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("users".into(), Value::from(self.users as u64));
        m.insert("periods".into(), Value::from(self.periods as u64));
        let coefs: Map<String, Value> = self
            .coefficients
            .iter()
            .map(|(k, v)| (k.clone(), float(*v)))
            .collect();
        m.insert("coefficients".into(), Value::Object(coefs));
        m.insert("random_effect_sd".into(), float(self.random_effect_sd));
        let noise = match self.noise {
            Noise::Homoskedastic => "homoskedastic",
            Noise::Heteroskedastic => "heteroskedastic",
        };
        m.insert("noise".into(), Value::from(noise));
        Value::Object(m)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedPanel {
    /// Features `s1..sk, time`, outcome `y`, clusters `u<i>`. No intercept.
    pub observations: ObservationSet,
    /// The time index of each row, usable as a within-cluster order.
    pub time: Vec<f64>,
    pub metadata: PanelMetadata,
}

/// A balanced panel of `users` clusters observed at times 1..=`periods`.
///
/// Static features are Bernoulli(½), so the distinct static rows number at
/// most 2^k. The outcome is a linear signal plus a per-user normal effect
/// plus noise.
pub fn gen_panel(users: usize, periods: usize, p_static: usize, seed: u64) -> Result<GeneratedPanel> {
    gen_panel_with(users, periods, p_static, seed, Noise::Homoskedastic)
}

pub fn gen_panel_with(
    users: usize,
    periods: usize,
    p_static: usize,
    seed: u64,
    noise: Noise,
) -> Result<GeneratedPanel> {
    if users == 0 || periods == 0 {
        return Err(Error::InvalidArgument("a panel needs at least one user and one period".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = users * periods;
    let p = p_static + 1;
    let intercept = 1.0;
    let static_coef: Vec<f64> = (0..p_static).map(|j| 0.5 * (j + 1) as f64).collect();
    let time_coef = 0.1;
    let re_sd = 1.0;

    let mut features = Vec::with_capacity(n * p);
    let mut outcomes = Vec::with_capacity(n);
    let mut time = Vec::with_capacity(n);
    let mut index = Vec::with_capacity(n);
    let mut statics = vec![0.0; p_static];
    for u in 0..users {
        for s in statics.iter_mut() {
            *s = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        }
        let z: f64 = StandardNormal.sample(&mut rng);
        let effect = re_sd * z;
        let signal: f64 = intercept + statics.iter().zip(&static_coef).map(|(s, b)| s * b).sum::<f64>();
        let sd = match noise {
            Noise::Homoskedastic => 1.0,
            Noise::Heteroskedastic => 1.0 + statics.iter().sum::<f64>(),
        };
        for t in 1..=periods {
            let t = t as f64;
            features.extend_from_slice(&statics);
            features.push(t);
            let e: f64 = StandardNormal.sample(&mut rng);
            outcomes.push(signal + time_coef * t + effect + sd * e);
            time.push(t);
            index.push(u);
        }
    }
    let mut names: Vec<String> = (1..=p_static).map(|j| format!("s{j}")).collect();
    names.push("time".into());
    let labels = (0..users).map(|u| format!("u{u}")).collect();
    let observations = ObservationSet::new(
        DMatrix::from_row_slice(n, p, &features),
        names.clone(),
        DMatrix::from_vec(n, 1, outcomes),
        vec!["y".into()],
    )?
    .with_clusters(ClusterLabels::from_indices(labels, index)?)?;

    let mut coefficients = vec![("intercept".to_owned(), intercept)];
    coefficients.extend(names[..p_static].iter().cloned().zip(static_coef));
    coefficients.push(("time".into(), time_coef));
    Ok(GeneratedPanel {
        observations,
        time,
        metadata: PanelMetadata {
            seed,
            users,
            periods,
            coefficients,
            random_effect_sd: re_sd,
            noise,
        },
    })
}

/// Writes a generated panel as CSV with columns `user, s1..sk, time, y`.
pub fn write_panel_csv<W: std::io::Write>(writer: W, panel: &GeneratedPanel) -> Result<()> {
    let obs = &panel.observations;
    let clusters = obs.clusters().expect("generated panels carry clusters");
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["user".to_owned()];
    header.extend(obs.feature_names().iter().cloned());
    header.extend(obs.outcome_names().iter().cloned());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..obs.n() {
        row.clear();
        row.push(clusters.label_of_row(i).to_owned());
        row.extend(obs.features().row(i).iter().map(|v| format!("{v:?}")));
        row.extend(obs.outcomes().row(i).iter().map(|v| format!("{v:?}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
