use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::ctmp::LogLikelihood;
use crate::error::Result;
use crate::estimation::{FitResult, IterationRecord};
use crate::hidden::{pair_index, ObservationParams};
use crate::model::{ModelParams, ModelSpec, Rates};

/// One row of the parameter table: symbol, effect name, estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub symbol: String,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub ess_min: Option<f64>,
    pub ess_mean: Option<f64>,
    pub acceptance_rate: Option<f64>,
}

/// Fitted-parameter file. `network`, `attribute` and `observation` are the
/// human-readable tables; `params`/`q_obs` are what the tool reads back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParams {
    pub method: String,
    pub time_unit: String,
    pub network: Vec<ParamEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attribute: Vec<ParamEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observation: Vec<ParamEntry>,
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_obs: Option<ObservationParams>,
    pub converged: bool,
    pub flags: Vec<String>,
    pub diagnostics: FitDiagnostics,
}

fn rate_entries(out: &mut Vec<ParamEntry>, r: &Rates, sym: &str, name: &str) {
    match r {
        Rates::Shared(v) => out.push(ParamEntry { symbol: sym.into(), name: name.into(), value: *v }),
        Rates::PerActor(v) => {
            for (i, x) in v.iter().enumerate() {
                out.push(ParamEntry { symbol: format!("{sym}_{i}"), name: format!("{name} {i}"), value: *x });
            }
        }
    }
}

/// Network table (`λ^n`, `β_k^n`) and attribute table (`λ^a`, `β_k^a`).
/// The attribute table is empty for a model without attributes.
pub fn parameter_table(spec: &ModelSpec, p: &ModelParams) -> (Vec<ParamEntry>, Vec<ParamEntry>) {
    let (net_names, attr_names) = spec.effect_labels();
    let mut net = Vec::new();
    rate_entries(&mut net, &p.lambda_network, "λ^n", "Rate/Actor");
    for (k, (name, v)) in net_names.iter().zip(&p.beta_network).enumerate() {
        net.push(ParamEntry { symbol: format!("β_{}^n", k + 1), name: name.clone(), value: *v });
    }
    let mut attr = Vec::new();
    if spec.n_attributes() > 0 {
        rate_entries(&mut attr, &p.lambda_attribute, "λ^a", "Rate/Actor");
        for (k, (name, v)) in attr_names.iter().zip(&p.beta_attribute).enumerate() {
            attr.push(ParamEntry { symbol: format!("β_{}^a", k + 1), name: name.clone(), value: *v });
        }
    }
    (net, attr)
}

fn flat_table(spec: &ModelSpec, p: &ModelParams) -> Vec<ParamEntry> {
    let (mut net, attr) = parameter_table(spec, p);
    net.extend(attr);
    net
}

/// `q_kl^obs` rows with `k, l` as the name.
pub fn observation_table(q: &ObservationParams) -> Vec<ParamEntry> {
    let q = q.as_array();
    [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .zip(q)
        .map(|(&(k, l), value)| ParamEntry { symbol: format!("q_{k}{l}^obs"), name: format!("{k}, {l}"), value })
        .collect()
}

impl FittedParams {
    pub fn new(method: &str, time_unit: &str, spec: &ModelSpec, fit: &FitResult, q_obs: Option<ObservationParams>) -> Self {
        let last = fit.trace.last();
        let (network, attribute) = parameter_table(spec, &fit.params);
        Self {
            method: method.into(),
            time_unit: time_unit.into(),
            network,
            attribute,
            observation: q_obs.as_ref().map(observation_table).unwrap_or_default(),
            params: fit.params.clone(),
            q_obs,
            converged: fit.converged,
            flags: fit.flags.clone(),
            diagnostics: FitDiagnostics {
                iterations: fit.trace.len(),
                ess_min: last.and_then(|r| r.ess_min),
                ess_mean: last.and_then(|r| r.ess_mean),
                acceptance_rate: last.and_then(|r| r.acceptance_rate),
            },
        }
    }
}

pub fn write_fitted(path: &Path, f: &FittedParams) -> Result<()> {
    write_json(path, f)
}

pub fn read_fitted(path: &Path) -> Result<FittedParams> {
    read_json(path)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per EM or Newton iteration with the parameter values after it.
pub fn write_trace_csv(path: &Path, spec: &ModelSpec, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> =
        ["iteration", "phase", "objective", "ess_min", "ess_mean", "acceptance_rate"].map(String::from).to_vec();
    let names: Vec<String> = match trace.first() {
        Some(r) => flat_table(spec, &r.params).into_iter().map(|e| e.symbol).collect(),
        None => flat_table(spec, &ModelParams::neutral(spec, 0.0, 0.0)).into_iter().map(|e| e.symbol).collect(),
    };
    header.extend(names);
    header.extend(["q_00", "q_01", "q_10", "q_11"].map(String::from));
    w.write_record(&header)?;
    for r in trace {
        let mut row = vec![
            r.iteration.to_string(),
            serde_json::to_value(r.phase)?.as_str().unwrap_or_default().to_string(),
            r.objective.to_string(),
            opt(r.ess_min),
            opt(r.ess_mean),
            opt(r.acceptance_rate),
        ];
        row.extend(flat_table(spec, &r.params).into_iter().map(|e| e.value.to_string()));
        match r.q_obs {
            Some(q) => row.extend(q.iter().map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `time,i,j,probability` rows from `marginals[grid][pair]`.
pub fn write_marginals_csv(path: &Path, n_actors: usize, grid: &[f64], marginals: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "i", "j", "probability"])?;
    for (t, row) in grid.iter().zip(marginals) {
        for i in 0..n_actors {
            for j in (0..n_actors).filter(|&j| j != i) {
                w.write_record([t.to_string(), i.to_string(), j.to_string(), row[pair_index(n_actors, i, j)].to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `trajectory,loglik,zero_probability` rows followed by a `total` row.
pub fn write_eval_csv(path: &Path, rows: &[(String, LogLikelihood)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["trajectory", "loglik", "zero_probability"])?;
    for (name, ll) in rows {
        w.write_record([name.clone(), ll.value.to_string(), ll.zero_probability.to_string()])?;
    }
    if !rows.is_empty() {
        let total: f64 = rows.iter().map(|r| r.1.value).sum();
        let zero = rows.iter().any(|r| r.1.zero_probability);
        w.write_record(["total".to_string(), total.to_string(), zero.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttributeDecl, EffectKind, EffectSpec};

    #[test]
    fn tables_follow_the_published_layout() {
        let spec = ModelSpec {
            n_actors: 3,
            attributes: vec![],
            effects: [EffectKind::Density, EffectKind::Reciprocity, EffectKind::Activity, EffectKind::Popularity]
                .map(EffectSpec::network)
                .to_vec(),
        };
        let mut p = ModelParams::neutral(&spec, 0.031, 0.0);
        p.beta_network = vec![-2.362, 1.21, 0.115, 0.119];
        let (t, a) = parameter_table(&spec, &p);
        assert!(a.is_empty());
        let names: Vec<_> = t.iter().map(|e| (e.symbol.as_str(), e.name.as_str())).collect();
        assert_eq!(
            names,
            [
                ("λ^n", "Rate/Actor"),
                ("β_1^n", "Density"),
                ("β_2^n", "Reciprocity"),
                ("β_3^n", "Activity"),
                ("β_4^n", "Popularity")
            ]
        );
        let q = observation_table(&ObservationParams::new(0.002, 0.023, 0.296, 0.604).unwrap());
        assert_eq!(q[2].symbol, "q_10^obs");
        assert_eq!(q[2].name, "1, 0");
        assert_eq!(q[2].value, 0.296);

        let spec = ModelSpec {
            n_actors: 3,
            attributes: vec![AttributeDecl::new("alcohol", 1, 5)],
            effects: vec![
                EffectSpec::network(EffectKind::Density),
                EffectSpec::network(EffectKind::Reciprocity),
                EffectSpec::network(EffectKind::Similarity),
                EffectSpec::attribute(0, EffectKind::Tendency),
                EffectSpec::attribute(0, EffectKind::Similarity),
            ],
        };
        let (net, attr) = parameter_table(&spec, &ModelParams::neutral(&spec, 0.1, 0.2));
        let names = |t: &[ParamEntry]| t.iter().map(|e| format!("{} {}", e.symbol, e.name)).collect::<Vec<_>>();
        assert_eq!(names(&net), ["λ^n Rate/Actor", "β_1^n Density", "β_2^n Reciprocity", "β_3^n Similarity"]);
        assert_eq!(names(&attr), ["λ^a Rate/Actor", "β_1^a Tendency", "β_2^a Similarity"]);
    }

    #[test]
    fn eval_total_is_the_row_sum() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        let rows: Vec<_> = [-1.25, -3.5, -0.125].iter().enumerate().map(|(k, v)| (format!("t{k}"), LogLikelihood::new(*v))).collect();
        write_eval_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.ends_with("total,-4.875,false\n"), "{text}");
        write_eval_csv(&p, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "trajectory,loglik,zero_probability\n");
    }
}
