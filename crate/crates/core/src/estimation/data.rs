use serde::{Deserialize, Serialize};

use crate::ctmp::{Evidence, EvidenceItem, Trajectory};
use crate::error::{Error, Result};
use crate::model::{ModelParams, ModelSpec, NetworkState};

/// Full observations of the network and attributes at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshots {
    pub times: Vec<f64>,
    pub states: Vec<NetworkState>,
}

impl Snapshots {
    pub fn new(times: Vec<f64>, states: Vec<NetworkState>) -> Result<Self> {
        if times.len() != states.len() || times.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least two snapshots with matching times, got {} times and {} states",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("snapshot times must be finite and strictly increasing".into()));
        }
        Ok(Self { times, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn span(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Link toggles and attribute unit steps needed between consecutive
    /// snapshots, summed over intervals.
    pub fn observed_changes(&self, spec: &ModelSpec) -> (f64, f64) {
        let mut links = 0.0;
        let mut attrs = 0.0;
        for w in self.states.windows(2) {
            for i in 0..spec.n_actors {
                for j in (0..spec.n_actors).filter(|&j| j != i) {
                    if w[0].tie(i, j) != w[1].tie(i, j) {
                        links += 1.0;
                    }
                }
                for h in 0..spec.n_attributes() {
                    attrs += (w[0].attr(h, i) - w[1].attr(h, i)).abs() as f64;
                }
            }
        }
        (links, attrs)
    }

    /// One evidence sequence per interval: start at snapshot `m`, observe
    /// every variable at snapshot `m + 1`. By the Markov property the
    /// intervals are independent given the snapshots.
    pub fn interval_sequences(&self, spec: &ModelSpec) -> Vec<EvidenceSequence> {
        (0..self.len() - 1)
            .map(|m| {
                let dt = self.times[m + 1] - self.times[m];
                let next = &self.states[m + 1];
                let items = spec
                    .variables()
                    .into_iter()
                    .map(|var| EvidenceItem::Point { time: dt, var, value: next.value(var) })
                    .collect();
                EvidenceSequence { initial: self.states[m].clone(), evidence: Evidence::new(items), t_end: dt }
            })
            .collect()
    }
}

/// A known initial state and evidence over `[0, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceSequence {
    pub initial: NetworkState,
    pub evidence: Evidence,
    pub t_end: f64,
}

#[derive(Debug, Clone)]
pub enum TrainingData {
    Snapshots(Vec<Snapshots>),
    Evidence(Vec<EvidenceSequence>),
    /// Fully observed trajectories; the E-step is exact.
    Complete(Vec<Trajectory>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Rate,
    Beta,
    Newton,
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    /// Expected complete-data log-likelihood (EM) or largest absolute
    /// t-ratio (method of moments).
    pub objective: f64,
    pub ess_min: Option<f64>,
    pub ess_mean: Option<f64>,
    pub acceptance_rate: Option<f64>,
    pub params: ModelParams,
    pub q_obs: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
    pub flags: Vec<String>,
}
