use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{FitResult, IterationRecord, Phase};
use super::mcem::{beta_step, flatten};
use super::objective::CompleteDataStats;
use crate::ctmp::{LogLikelihood, Trajectory};
use crate::error::{Error, Result};
use crate::hidden::{initial_consistent_trajectory, mh_run, observation_stats, EventStream, MHConfig, MHState, ObservationParams};
use crate::model::{trajectory_log_likelihood, Model, ModelParams, ModelSpec};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HiddenEMConfig {
    pub mh: MHConfig,
    /// Burn-in for every E-step after the first; the chain carries over.
    pub n_burn_warm: usize,
    pub max_outer_iters: usize,
    pub rate_iters: usize,
    pub beta_iters: usize,
    pub tol: f64,
    pub rate_floor: f64,
    pub seed: u64,
}

impl Default for HiddenEMConfig {
    fn default() -> Self {
        Self {
            mh: MHConfig::default(),
            n_burn_warm: 2000,
            max_outer_iters: 10,
            rate_iters: 2,
            beta_iters: 3,
            tol: 0.05,
            rate_floor: 1e-3,
            seed: 0,
        }
    }
}

/// Hidden-model fit: the network parameters and the observation rates.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenFit {
    pub fit: FitResult,
    pub obs: ObservationParams,
}

/// Closed-form `q^obs`: pooled event counts over pooled context durations,
/// averaged over equally weighted samples. A context that no sample visits
/// keeps its value from `previous` and is reported in the second return.
pub fn estimate_observation_params(
    samples: &[Trajectory],
    events: &EventStream,
    previous: &ObservationParams,
) -> Result<(ObservationParams, Vec<usize>)> {
    let mut counts = [0.0; 4];
    let mut durations = [0.0; 4];
    for s in samples {
        let (c, d) = observation_stats(s, events);
        for k in 0..4 {
            counts[k] += c[k];
            durations[k] += d[k];
        }
    }
    observation_ratio(counts, durations, previous)
}

fn observation_ratio(counts: [f64; 4], durations: [f64; 4], previous: &ObservationParams) -> Result<(ObservationParams, Vec<usize>)> {
    let mut q = previous.as_array();
    let mut unvisited = Vec::new();
    for k in 0..4 {
        if durations[k] > 0.0 {
            q[k] = counts[k] / durations[k];
        } else {
            unvisited.push(k);
        }
    }
    Ok((ObservationParams::from_array(q)?, unvisited))
}

/// Starting observation rates: the mean event rate per directed pair,
/// spread so that contexts with more links present start with higher rates.
pub fn initial_observation_params(streams: &[EventStream]) -> Result<ObservationParams> {
    let count: usize = streams.iter().map(|s| s.events.len()).sum();
    let exposure: f64 = streams.iter().map(|s| (s.n_actors * (s.n_actors - 1)) as f64 * s.t_end).sum();
    let base = if exposure > 0.0 { (count as f64 / exposure).max(1e-3) } else { 1.0 };
    ObservationParams::new(0.5 * base, base, 2.0 * base, 3.0 * base)
}

const CONTEXTS: [&str; 4] = ["00", "01", "10", "11"];

/// Monte Carlo EM for the hidden network model.
///
/// Each E-step runs the Metropolis-Hastings sampler at the current
/// parameters, one chain per independent event stream, and treats the draws
/// as equally weighted complete data. The M-step updates the network rates
/// and weights as in [`super::mcem_fit`] and `q^obs` in closed form.
pub fn hidden_mcem_fit(
    spec: &ModelSpec,
    streams: &[EventStream],
    initial: Option<(ModelParams, ObservationParams)>,
    config: &HiddenEMConfig,
) -> Result<HiddenFit> {
    spec.validate()?;
    config.mh.validate()?;
    if spec.n_attributes() > 0 {
        return Err(Error::InvalidModel("the hidden network model has no attributes".into()));
    }
    if streams.iter().all(|s| s.events.is_empty()) {
        return Err(Error::InvalidArgument("event stream is empty".into()));
    }
    for s in streams {
        s.validate()?;
    }
    if config.mh.n_samples == 0 || !(config.tol > 0.0) {
        return Err(Error::InvalidArgument("hidden EM needs n_samples >= 1 and tol > 0".into()));
    }
    let (mut params, mut obs) = match initial {
        Some(x) => x,
        None => (ModelParams::neutral(spec, 0.1, 0.0), initial_observation_params(streams)?),
    };
    let mut model = Model::new(spec.clone(), params.clone())?;
    let mut chains: Vec<Trajectory> =
        streams.iter().map(|e| initial_consistent_trajectory(&model, e)).collect::<Result<_>>()?;
    let mut flags = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iteration = 0usize;

    for _outer in 0..config.max_outer_iters {
        let mut before = flatten(&params, spec.n_actors);
        before.extend(obs.as_array().iter().map(|q| q.max(1e-300).ln()));
        for phase in (0..config.rate_iters).map(|_| Phase::Rate).chain((0..config.beta_iters).map(|_| Phase::Beta)) {
            let mut mh = config.mh;
            if iteration > 0 {
                mh.n_burn = config.n_burn_warm;
            }
            let runs: Vec<Result<_>> = chains
                .par_iter()
                .zip(streams)
                .enumerate()
                .map(|(s, (current, events))| {
                    let state = MHState::new(&model, &obs, events, current.clone())?;
                    mh_run(state, &model, &obs, events, &mh, &mut substream(config.seed, iteration as u64, s as u64))
                })
                .collect();
            let mut stats = CompleteDataStats::new(&model);
            let mut counts = [0.0; 4];
            let mut durations = [0.0; 4];
            let mut acc = 0.0;
            for (s, run) in runs.into_iter().enumerate() {
                let run = run?;
                let w = 1.0 / run.samples.len() as f64;
                for t in &run.samples {
                    stats.add_trajectory(&model, t, w)?;
                    let (c, d) = observation_stats(t, &streams[s]);
                    for k in 0..4 {
                        counts[k] += w * c[k];
                        durations[k] += w * d[k];
                    }
                }
                acc += run.acceptance_rate / streams.len() as f64;
                chains[s] = run.final_state.current;
            }
            match phase {
                Phase::Rate => {
                    let (ln, _) = stats.rate_mle(params.lambda_network.is_shared(), config.rate_floor);
                    params.lambda_network = ln;
                    let (q, unvisited) = observation_ratio(counts, durations, &obs)?;
                    for k in unvisited {
                        flags.push(format!("iteration {iteration}: context {} unvisited, q_obs held", CONTEXTS[k]));
                    }
                    obs = q;
                }
                _ => match beta_step(&stats, &params).0 {
                    Some(p) => params = p,
                    None => flags.push(format!("iteration {iteration}: non-finite objective, beta step skipped")),
                },
            }
            model = model.with_params(params.clone())?;
            trace.push(IterationRecord {
                iteration,
                phase,
                objective: stats.expected_log_likelihood(&params),
                ess_min: None,
                ess_mean: None,
                acceptance_rate: Some(acc),
                params: params.clone(),
                q_obs: Some(obs.as_array()),
            });
            log::info!("hidden EM iteration {iteration}: acceptance {acc:.3}, q_obs {:?}", obs.as_array());
            iteration += 1;
        }
        let mut after = flatten(&params, spec.n_actors);
        after.extend(obs.as_array().iter().map(|q| q.max(1e-300).ln()));
        let change = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        log::info!("hidden EM outer iteration: max parameter change {change:.4}");
        if change < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        flags.push(format!("not_converged: {} outer iterations", config.max_outer_iters));
    }
    Ok(HiddenFit { fit: FitResult { params, converged, trace, flags }, obs })
}

/// Exact log-likelihood of each fully observed test trajectory.
pub fn heldout_loglik(model: &Model, trajectories: &[Trajectory]) -> Result<Vec<LogLikelihood>> {
    trajectories.iter().map(|t| trajectory_log_likelihood(model, t)).collect()
}
