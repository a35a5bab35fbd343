use serde::Serialize;

use super::proposal::WeightedTrajectory;
use crate::ctmp::Trajectory;
use crate::diagnostics::{self, normalized_weights};
use crate::error::{Error, Result};

/// Self-normalized estimate of `E[f(σ) | e]` from weighted samples.
pub fn estimate_expectation<F>(f: F, samples: &[WeightedTrajectory]) -> Result<Vec<f64>>
where
    F: Fn(&Trajectory) -> Vec<f64>,
{
    estimate_with_error(f, samples).map(|e| e.mean)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEstimate {
    pub mean: Vec<f64>,
    /// Delta-method standard error `sqrt(Σ w̄² (f − μ)²)` per component.
    pub std_error: Vec<f64>,
    pub ess: f64,
}

pub fn estimate_with_error<F>(f: F, samples: &[WeightedTrajectory]) -> Result<WeightedEstimate>
where
    F: Fn(&Trajectory) -> Vec<f64>,
{
    let log_w: Vec<f64> = samples.iter().map(|s| s.log_weight).collect();
    let w = normalized_weights(&log_w).ok_or(Error::DegenerateSamples)?;
    let mut values = Vec::new();
    let mut mean: Vec<f64> = Vec::new();
    for (s, &wk) in samples.iter().zip(&w) {
        if wk == 0.0 {
            values.push(None);
            continue;
        }
        let v = f(&s.traj);
        if mean.is_empty() {
            mean = vec![0.0; v.len()];
        }
        for (m, x) in mean.iter_mut().zip(&v) {
            *m += wk * x;
        }
        values.push(Some(v));
    }
    let mut var = vec![0.0; mean.len()];
    for (v, &wk) in values.iter().zip(&w) {
        if let Some(v) = v {
            for k in 0..mean.len() {
                var[k] += wk * wk * (v[k] - mean[k]).powi(2);
            }
        }
    }
    Ok(WeightedEstimate {
        mean,
        std_error: var.into_iter().map(f64::sqrt).collect(),
        ess: diagnostics::effective_sample_size(&log_w),
    })
}

pub fn effective_sample_size(samples: &[WeightedTrajectory]) -> f64 {
    let log_w: Vec<f64> = samples.iter().map(|s| s.log_weight).collect();
    diagnostics::effective_sample_size(&log_w)
}

/// One-line summary of a batch of weighted samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchDiagnostics {
    pub samples: usize,
    pub failed: usize,
    pub log_weight_mean: f64,
    pub log_weight_var: f64,
    pub ess: f64,
}

impl BatchDiagnostics {
    pub fn from_samples(samples: &[WeightedTrajectory]) -> Self {
        let finite: Vec<f64> = samples.iter().map(|s| s.log_weight).filter(|w| w.is_finite()).collect();
        let n = finite.len().max(1) as f64;
        let mean = finite.iter().sum::<f64>() / n;
        let var = finite.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
        Self {
            samples: samples.len(),
            failed: samples.len() - finite.len(),
            log_weight_mean: mean,
            log_weight_var: var,
            ess: effective_sample_size(samples),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostics serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmp::VariableId;

    fn sample(log_weight: f64, value: i32) -> WeightedTrajectory {
        let traj = Trajectory::constant(
            vec![VariableId::Link { from: 0, to: 1 }],
            vec![crate::ctmp::StateSpace::BINARY],
            vec![value],
            1.0,
        )
        .unwrap();
        WeightedTrajectory { traj, log_weight, failure: None }
    }

    fn value(t: &Trajectory) -> Vec<f64> {
        vec![t.value_at(0, 0.0) as f64]
    }

    #[test]
    fn equal_weights_average() {
        let s = vec![sample(-3.0, 1), sample(-3.0, 0), sample(-3.0, 1), sample(-3.0, 1)];
        assert_eq!(estimate_expectation(value, &s).unwrap(), vec![0.75]);
        assert!((effective_sample_size(&s) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_and_dominant() {
        assert_eq!(estimate_expectation(value, &[sample(-700.0, 1)]).unwrap(), vec![1.0]);
        let s = vec![sample(0.0, 1), sample(-50.0, 0), sample(-60.0, 0)];
        assert!((effective_sample_size(&s) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_set_is_an_error() {
        let s = vec![sample(f64::NEG_INFINITY, 1), sample(f64::NEG_INFINITY, 0)];
        assert!(matches!(estimate_expectation(value, &s), Err(Error::DegenerateSamples)));
    }

    #[test]
    fn diagnostics_line_is_json() {
        let s = vec![sample(0.0, 1), sample(f64::NEG_INFINITY, 0)];
        let d = BatchDiagnostics::from_samples(&s);
        assert_eq!(d.failed, 1);
        let v: serde_json::Value = serde_json::from_str(&d.to_json_line()).unwrap();
        assert_eq!(v["samples"], 2);
    }
}
