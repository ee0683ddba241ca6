//! Deterministic JSON documents for fit results and table summaries.
//!
//! Keys keep insertion order and every float is printed with 17 significant
//! digits, so equal results always serialize to equal bytes.

use serde_json::{Map, Number, Value};

use crate::model::{Covariance, FitResult, SuffStatsTable};

/// A float as a JSON number with 17 significant digits; non-finite values
/// become `null`.
pub fn float(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    let v = if v == 0.0 { 0.0 } else { v };
    let text = format!("{v:.16e}");
    text.parse::<Number>().map(Value::Number).unwrap_or(Value::Null)
}

fn named_floats<'a>(names: &[String], values: impl IntoIterator<Item = f64> + 'a) -> Value {
    let map: Map<String, Value> = names.iter().cloned().zip(values.into_iter().map(float)).collect();
    Value::Object(map)
}

/// The result document emitted by the `fit` command.
pub fn fit_to_json(fit: &FitResult, timing_ms: Option<f64>) -> Value {
    let mut doc = Map::new();
    let mut coefficients = Map::new();
    for (k, y) in fit.outcome_names.iter().enumerate() {
        coefficients.insert(y.clone(), named_floats(&fit.feature_names, fit.beta.column(k).iter().copied()));
    }
    doc.insert("coefficients".into(), Value::Object(coefficients));

    let (std_errors, covariance) = match &fit.covariance {
        Covariance::Available(mats) => {
            let mut se = Map::new();
            let mut cov = Map::new();
            for (y, v) in fit.outcome_names.iter().zip(mats) {
                let diag = (0..v.nrows()).map(|i| v[(i, i)].max(0.0).sqrt());
                se.insert(y.clone(), named_floats(&fit.feature_names, diag));
                let rows = (0..v.nrows())
                    .map(|i| Value::Array((0..v.ncols()).map(|j| float(v[(i, j)])).collect()))
                    .collect();
                cov.insert(y.clone(), Value::Array(rows));
            }
            (Value::Object(se), Value::Object(cov))
        }
        Covariance::Lossy => (Value::Null, Value::Null),
    };
    doc.insert("std_errors".into(), std_errors);
    doc.insert("covariance".into(), covariance);
    doc.insert(
        "covariance_lossy".into(),
        Value::Bool(matches!(fit.covariance, Covariance::Lossy)),
    );
    doc.insert(
        "sigma2".into(),
        fit.sigma2
            .as_ref()
            .map_or(Value::Null, |s| named_floats(&fit.outcome_names, s.iter().copied())),
    );
    let d = &fit.diagnostics;
    doc.insert("df_residual".into(), float(fit.df_residual));
    doc.insert("n".into(), Value::from(d.n));
    doc.insert("G".into(), Value::from(d.groups as u64));
    doc.insert("C".into(), d.clusters.map_or(Value::Null, |c| Value::from(c as u64)));
    doc.insert("compression_ratio".into(), float(d.compression_ratio));
    doc.insert(
        "covariance_spec".into(),
        d.covariance_spec
            .map_or_else(|| Value::from("information"), |s| Value::from(s.to_string())),
    );
    if let Some(c) = d.converged {
        doc.insert("converged".into(), Value::Bool(c));
    }
    if let Some(i) = d.iterations {
        doc.insert("iterations".into(), Value::from(i as u64));
    }
    if let Some(t) = timing_ms {
        doc.insert("timing_ms".into(), float(t));
    }
    Value::Object(doc)
}

/// Counts and count-weighted means of a compressed table.
///
/// Feature means weight each distinct row by its count (or by Σw for a
/// weighted table); outcome means are Σy / n (or Σwy / Σw).
pub fn summarize(table: &SuffStatsTable) -> Value {
    let g = table.num_groups();
    let weights: Vec<f64> = match table.weighted() {
        Some(w) => w.w_sum.iter().copied().collect(),
        None => table.count().iter().map(|&c| c as f64).collect(),
    };
    let total: f64 = weights.iter().sum();
    let mut doc = Map::new();
    doc.insert("n".into(), Value::from(table.num_observations()));
    doc.insert("G".into(), Value::from(g as u64));
    doc.insert(
        "C".into(),
        table.num_clusters().map_or(Value::Null, |c| Value::from(c as u64)),
    );
    if let Some(w) = table.weighted() {
        doc.insert("weight_kind".into(), Value::from(w.kind.as_str()));
        doc.insert("weight_sum".into(), float(total));
    }
    let feature_means = (0..table.p()).map(|j| {
        let s: f64 = (0..g).map(|i| weights[i] * table.features()[(i, j)]).sum();
        s / total
    });
    doc.insert("feature_means".into(), named_floats(table.feature_names(), feature_means));
    let y = match table.weighted() {
        Some(w) => &w.wy_sum,
        None => table.y_sum(),
    };
    let outcome_means = (0..table.o()).map(|k| y.column(k).sum() / total);
    doc.insert("outcome_means".into(), named_floats(table.outcome_names(), outcome_means));
    Value::Object(doc)
}
