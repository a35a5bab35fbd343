use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{EvidenceSequence, FitResult, IterationRecord, Phase, TrainingData};
use super::objective::CompleteDataStats;
use super::optimize::{maximize, CgOptions};
use crate::diagnostics::normalized_weights;
use crate::error::{Error, Result};
use crate::importance::{propose_batch, BatchDiagnostics, ProposalConfig};
use crate::model::{Model, ModelParams, ModelSpec, Rates};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EMConfig {
    pub samples_per_iter: usize,
    pub max_outer_iters: usize,
    pub rate_iters: usize,
    pub beta_iters: usize,
    /// Converged once no parameter (rates on the log scale) moves by more
    /// than this over an outer iteration.
    pub tol: f64,
    pub kappa: f64,
    pub rate_floor: f64,
    pub shared_rates: bool,
    pub seed: u64,
}

impl Default for EMConfig {
    fn default() -> Self {
        Self {
            samples_per_iter: 400,
            max_outer_iters: 10,
            rate_iters: 2,
            beta_iters: 3,
            tol: 0.05,
            kappa: 0.5,
            rate_floor: 1e-3,
            shared_rates: true,
            seed: 0,
        }
    }
}

impl EMConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_iter == 0 || !(self.tol > 0.0) || !(self.rate_floor > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid EM configuration {self:?}")));
        }
        ProposalConfig { kappa: self.kappa }.validate()
    }
}

/// Flattened `(ln λⁿ…, ln λᵃ…, βⁿ, βᵃ)` used for convergence checks.
pub(crate) fn flatten(p: &ModelParams, n: usize) -> Vec<f64> {
    let rates = |r: &Rates| -> Vec<f64> {
        match r {
            Rates::Shared(x) => vec![x.max(1e-300).ln()],
            Rates::PerActor(v) => v.iter().take(n).map(|x| x.max(1e-300).ln()).collect(),
        }
    };
    let mut out = rates(&p.lambda_network);
    out.extend(rates(&p.lambda_attribute));
    out.extend(&p.beta_network);
    out.extend(&p.beta_attribute);
    out
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Maximizes the choice part of the expected log-likelihood in `β`, starting
/// from the current weights. Returns the new weights, or `None` if the
/// optimizer hit a non-finite value.
pub(crate) fn beta_step(stats: &CompleteDataStats, params: &ModelParams) -> (Option<ModelParams>, bool) {
    let beta0: Vec<f64> = params.beta_network.iter().chain(&params.beta_attribute).copied().collect();
    let start = stats.choice_log_likelihood_and_grad(&beta0).0;
    let res = maximize(|b| stats.choice_log_likelihood_and_grad(b), &beta0, &CgOptions::default());
    if res.aborted {
        return (None, false);
    }
    let mut beta = res.x;
    // guard against a decrease on the fixed sample set
    if res.value < start {
        let half: Vec<f64> = beta.iter().zip(&beta0).map(|(b, a)| 0.5 * (a + b)).collect();
        if stats.choice_log_likelihood_and_grad(&half).0 >= start {
            beta = half;
        } else {
            beta = beta0;
        }
    }
    let kn = params.beta_network.len();
    let mut p = params.clone();
    p.beta_network = beta[..kn].to_vec();
    p.beta_attribute = beta[kn..].to_vec();
    (Some(p), res.converged)
}

/// Initial parameters: `β = 0` and rates matched to the changes visible in
/// the data.
pub fn initial_params(spec: &ModelSpec, data: &TrainingData, floor: f64) -> ModelParams {
    let n = spec.n_actors as f64;
    let h = spec.n_attributes().max(1) as f64;
    let (links, attrs, time) = match data {
        TrainingData::Snapshots(sets) => sets.iter().fold((0.0, 0.0, 0.0), |acc, s| {
            let (l, a) = s.observed_changes(spec);
            (acc.0 + l, acc.1 + a, acc.2 + s.span())
        }),
        TrainingData::Evidence(seqs) => (0.0, 0.0, seqs.iter().map(|s| s.t_end).sum()),
        TrainingData::Complete(ts) => (0.0, 0.0, ts.iter().map(|t| t.t_end()).sum()),
    };
    let rate = |c: f64, div: f64| if time > 0.0 { (c / (div * time)).max(floor) } else { floor };
    let mut p = ModelParams::neutral(spec, rate(links, n), if spec.n_attributes() == 0 { 0.0 } else { rate(attrs, n * h) });
    if matches!(data, TrainingData::Evidence(_)) {
        p.lambda_network = Rates::Shared(0.5);
        if spec.n_attributes() > 0 {
            p.lambda_attribute = Rates::Shared(0.5);
        }
    }
    p
}

struct EStep {
    stats: CompleteDataStats,
    ess: Vec<f64>,
}

fn e_step(model: &Model, seqs: &[EvidenceSequence], config: &EMConfig, iteration: usize) -> Result<EStep> {
    let proposal = ProposalConfig { kappa: config.kappa };
    let parts: Vec<Result<(CompleteDataStats, f64)>> = seqs
        .par_iter()
        .enumerate()
        .map(|(s, seq)| {
            let seed = substream(config.seed, iteration as u64, s as u64).gen::<u64>();
            let samples =
                propose_batch(model, &seq.initial, &seq.evidence, seq.t_end, &proposal, config.samples_per_iter, seed)?;
            let log_w: Vec<f64> = samples.iter().map(|w| w.log_weight).collect();
            let Some(w) = normalized_weights(&log_w) else {
                let d = BatchDiagnostics::from_samples(&samples);
                return Err(Error::Estimation(format!(
                    "sequence {s}: every importance weight is zero ({})",
                    d.to_json_line()
                )));
            };
            let diag = BatchDiagnostics::from_samples(&samples);
            log::debug!("iteration {iteration} sequence {s}: {}", diag.to_json_line());
            let mut stats = CompleteDataStats::new(model);
            for (sample, wk) in samples.iter().zip(w) {
                stats.add_trajectory(model, &sample.traj, wk)?;
            }
            Ok((stats, diag.ess))
        })
        .collect();
    let mut stats = CompleteDataStats::new(model);
    let mut ess = Vec::with_capacity(parts.len());
    for part in parts {
        let (s, e) = part?;
        stats.merge(s);
        ess.push(e);
    }
    Ok(EStep { stats, ess })
}

fn record(iteration: usize, phase: Phase, stats: &CompleteDataStats, params: &ModelParams, ess: &[f64]) -> IterationRecord {
    let (ess_min, ess_mean) = if ess.is_empty() {
        (None, None)
    } else {
        (Some(ess.iter().copied().fold(f64::INFINITY, f64::min)), Some(ess.iter().sum::<f64>() / ess.len() as f64))
    };
    IterationRecord {
        iteration,
        phase,
        objective: stats.expected_log_likelihood(params),
        ess_min,
        ess_mean,
        acceptance_rate: None,
        params: params.clone(),
        q_obs: None,
    }
}

/// Monte Carlo EM for the co-evolution model.
///
/// Each outer iteration runs `rate_iters` E/M steps that update only the
/// rates (`λ = E[M]/T`) and then `beta_iters` that update only `β` by
/// conjugate-gradient ascent of the expected choice log-likelihood. The
/// E-step draws `samples_per_iter` importance-weighted trajectories per
/// evidence sequence; snapshot data is split into independent intervals.
pub fn mcem_fit(spec: &ModelSpec, data: &TrainingData, initial: Option<ModelParams>, config: &EMConfig) -> Result<FitResult> {
    config.validate()?;
    spec.validate()?;
    let mut flags = Vec::new();
    let mut params = initial.unwrap_or_else(|| initial_params(spec, data, config.rate_floor));
    if config.shared_rates {
        // keep the parameterization the caller asked for
        params.lambda_network = Rates::Shared(params.lambda_network.sum(spec.n_actors) / spec.n_actors as f64);
        params.lambda_attribute = Rates::Shared(params.lambda_attribute.sum(spec.n_actors) / spec.n_actors as f64);
    }
    let mut model = Model::new(spec.clone(), params.clone())?;

    let seqs: Vec<EvidenceSequence> = match data {
        TrainingData::Complete(trajs) => return fit_complete(spec, trajs, params, config),
        TrainingData::Snapshots(sets) => {
            for s in sets {
                let (l, a) = s.observed_changes(spec);
                if l + a == 0.0 {
                    flags.push("low_information: snapshots show no change; rates driven to the floor".into());
                }
            }
            sets.iter().flat_map(|s| s.interval_sequences(spec)).collect()
        }
        TrainingData::Evidence(seqs) => seqs.clone(),
    };
    if seqs.is_empty() {
        return Err(Error::InvalidArgument("no training sequences".into()));
    }

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iteration = 0;
    for _outer in 0..config.max_outer_iters {
        let before = flatten(&params, spec.n_actors);
        for _ in 0..config.rate_iters {
            let es = e_step(&model, &seqs, config, iteration)?;
            let (ln, la) = es.stats.rate_mle(config.shared_rates, config.rate_floor);
            params.lambda_network = ln;
            params.lambda_attribute = la;
            model = model.with_params(params.clone())?;
            trace.push(record(iteration, Phase::Rate, &es.stats, &params, &es.ess));
            iteration += 1;
        }
        for _ in 0..config.beta_iters {
            let es = e_step(&model, &seqs, config, iteration)?;
            match beta_step(&es.stats, &params) {
                (Some(p), _) => params = p,
                (None, _) => {
                    flags.push(format!("iteration {iteration}: non-finite objective, beta step skipped"));
                    trace.push(record(iteration, Phase::Beta, &es.stats, &params, &es.ess));
                    iteration += 1;
                    break;
                }
            }
            model = model.with_params(params.clone())?;
            trace.push(record(iteration, Phase::Beta, &es.stats, &params, &es.ess));
            iteration += 1;
        }
        let change = max_change(&before, &flatten(&params, spec.n_actors));
        log::info!("mcem outer iteration: max parameter change {change:.4}");
        if change < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        flags.push(format!("not_converged: {} outer iterations", config.max_outer_iters));
    }
    Ok(FitResult { params, converged, trace, flags })
}

/// Exact maximum likelihood from fully observed trajectories.
fn fit_complete(spec: &ModelSpec, trajs: &[crate::ctmp::Trajectory], mut params: ModelParams, config: &EMConfig) -> Result<FitResult> {
    let model = Model::new(spec.clone(), params.clone())?;
    let mut stats = CompleteDataStats::new(&model);
    for t in trajs {
        stats.add_trajectory(&model, t, 1.0)?;
    }
    let (ln, la) = stats.rate_mle(config.shared_rates, 0.0);
    params.lambda_network = ln;
    params.lambda_attribute = la;
    let (p, converged) = beta_step(&stats, &params);
    let mut flags = Vec::new();
    match p {
        Some(p) => params = p,
        None => flags.push("non-finite objective, beta left at its initial value".into()),
    }
    if !converged {
        flags.push("beta optimizer did not reach its gradient tolerance".into());
    }
    let trace = vec![record(0, Phase::Beta, &stats, &params, &[])];
    Ok(FitResult { params, converged, trace, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::data::Snapshots;
    use crate::model::{forward_sample, AttributeDecl, EffectKind, EffectSpec, NetworkState};
    use crate::rng::{seeded, stream};

    fn spec() -> ModelSpec {
        ModelSpec {
            n_actors: 5,
            attributes: vec![AttributeDecl::new("z", 1, 3)],
            effects: vec![
                EffectSpec::network(EffectKind::Density),
                EffectSpec::network(EffectKind::Reciprocity),
                EffectSpec::attribute(0, EffectKind::Tendency),
            ],
        }
    }

    fn truth() -> Model {
        let s = spec();
        let mut p = ModelParams::neutral(&s, 0.6, 0.4);
        p.beta_network = vec![-1.0, 1.5];
        p.beta_attribute = vec![0.5];
        Model::new(s, p).unwrap()
    }

    #[test]
    fn complete_data_gives_exact_rates_and_stationary_beta() {
        let m = truth();
        let trajs: Vec<_> = (0..20)
            .map(|r| forward_sample(&m, &NetworkState::for_spec(m.spec()), 10.0, &mut stream(50, r)).unwrap())
            .collect();
        let fit = mcem_fit(m.spec(), &TrainingData::Complete(trajs.clone()), None, &EMConfig::default()).unwrap();
        let links: usize = trajs
            .iter()
            .flat_map(|t| t.transitions())
            .filter(|tr| tr.var < 20)
            .count();
        assert_eq!(fit.params.lambda_network, Rates::Shared(links as f64 / 5.0 / 200.0));
        assert!(fit.converged);
        let model = Model::new(m.spec().clone(), fit.params.clone()).unwrap();
        let mut stats = CompleteDataStats::new(&model);
        for t in &trajs {
            stats.add_trajectory(&model, t, 1.0).unwrap();
        }
        let beta: Vec<f64> = fit.params.beta_network.iter().chain(&fit.params.beta_attribute).copied().collect();
        let (v, g) = stats.choice_log_likelihood_and_grad(&beta);
        let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(gn < 1e-5 * (1.0 + v.abs()));
    }

    #[test]
    fn snapshot_fit_moves_toward_truth() {
        let m = truth();
        let mut rng = seeded(51);
        let mut state = NetworkState::for_spec(m.spec());
        let mut times = vec![0.0];
        let mut states = vec![state.clone()];
        for k in 1..=8 {
            let t = forward_sample(&m, &state, 1.0, &mut rng).unwrap();
            state = NetworkState::from_values(m.spec(), &t.final_state()).unwrap();
            times.push(k as f64);
            states.push(state.clone());
        }
        let data = TrainingData::Snapshots(vec![Snapshots::new(times, states).unwrap()]);
        let cfg = EMConfig { samples_per_iter: 100, max_outer_iters: 3, seed: 3, ..EMConfig::default() };
        let fit = mcem_fit(m.spec(), &data, None, &cfg).unwrap();
        assert!(fit.trace.len() >= 5);
        assert!(fit.params.beta_network[0] < 0.0, "{:?}", fit.params);
        let Rates::Shared(l) = fit.params.lambda_network else { panic!() };
        assert!(l > 0.2 && l < 1.5, "{l}");
        for r in &fit.trace {
            assert!(r.ess_min.unwrap() >= 1.0);
        }
    }

    #[test]
    fn unchanged_snapshots_are_flagged() {
        let m = truth();
        let s = NetworkState::for_spec(m.spec());
        let data = TrainingData::Snapshots(vec![Snapshots::new(vec![0.0, 0.01], vec![s.clone(), s]).unwrap()]);
        let cfg = EMConfig { samples_per_iter: 20, max_outer_iters: 1, ..EMConfig::default() };
        let fit = mcem_fit(m.spec(), &data, None, &cfg).unwrap();
        assert!(fit.flags.iter().any(|f| f.starts_with("low_information")));
        let Rates::Shared(l) = fit.params.lambda_network else { panic!() };
        assert!(l < 0.5);
    }
}
