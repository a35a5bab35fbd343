use rand::Rng;
use serde::{Deserialize, Serialize};

use super::events::{event_log_likelihood, link_var, pair_index, EventStream, ObservationParams};
use crate::ctmp::sampling::sample_exponential;
use crate::ctmp::{Segment, Trajectory};
use crate::error::{Error, Result};
use crate::model::{network_choice_probs, trajectory_log_likelihood, Model, NetworkState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MHConfig {
    /// Prior probability that a hidden link is present at time 0.
    pub p0: f64,
    pub n_burn: usize,
    pub n_samples: usize,
    pub thin: usize,
}

impl Default for MHConfig {
    fn default() -> Self {
        Self { p0: 0.1, n_burn: 10_000, n_samples: 100, thin: 1000 }
    }
}

impl MHConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p0 > 0.0 && self.p0 < 1.0) || self.thin == 0 {
            return Err(Error::InvalidArgument(format!("invalid MH schedule {self:?}")));
        }
        Ok(())
    }
}

/// Chain state: the current link trajectory and cached likelihood terms.
#[derive(Debug, Clone)]
pub struct MHState {
    pub current: Trajectory,
    pub iteration: u64,
    pub accepted: u64,
    network_ll: f64,
    pair_ll: Vec<f64>,
}

impl MHState {
    pub fn new(model: &Model, obs: &ObservationParams, events: &EventStream, current: Trajectory) -> Result<Self> {
        let n = model.n_actors();
        if events.n_actors != n || current.t_end() != events.t_end {
            return Err(Error::InvalidArgument("trajectory, model and events disagree".into()));
        }
        let network_ll = trajectory_log_likelihood(model, &current)?.value;
        let by_pair = events.by_pair();
        let mut pair_ll = vec![0.0; n * (n - 1)];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let p = pair_index(n, i, j);
                pair_ll[p] = event_log_likelihood(
                    &by_pair[p],
                    current.segments(p),
                    current.segments(pair_index(n, j, i)),
                    events.t_end,
                    obs,
                )
                .value;
            }
        }
        Ok(Self { current, iteration: 0, accepted: 0, network_ll, pair_ll })
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.iteration == 0 {
            0.0
        } else {
            self.accepted as f64 / self.iteration as f64
        }
    }
}

/// Path of `Y_ij` drawn from its conditional intensity given every other
/// path in `traj`, together with the log-density of that path (initial
/// value excluded).
pub(crate) fn sample_link_path<R: Rng + ?Sized>(
    model: &Model,
    traj: &Trajectory,
    i: usize,
    j: usize,
    initial: i32,
    rng: &mut R,
) -> Result<(Vec<Segment>, f64)> {
    let mut path = vec![Segment { start: 0.0, value: initial }];
    let mut log_q = 0.0;
    walk_link_path(model, traj, i, j, initial, |state, t0, t1| {
        let mut t = t0;
        loop {
            let y = state.tie(i, j);
            let rate = model.lambda_network(i) * network_choice_probs(model, state, i)[j];
            log_q -= rate * (t1 - t);
            if rate <= 0.0 {
                return Ok(());
            }
            let dt = sample_exponential(rate, rng)?;
            if t + dt >= t1 {
                return Ok(());
            }
            let time = (t + dt).max(path.last().unwrap().start.next_up());
            if time >= t1 {
                return Ok(());
            }
            log_q += rate.ln() + rate * (t1 - time);
            t = time;
            path.push(Segment { start: time, value: 1 - y as i32 });
            state.set_tie(i, j, !y);
        }
    })?;
    Ok((path, log_q))
}

/// Log-density of an existing `Y_ij` path under its conditional intensity.
pub(crate) fn link_path_log_density(model: &Model, traj: &Trajectory, i: usize, j: usize) -> Result<f64> {
    let n = model.n_actors();
    let own = traj.segments(pair_index(n, i, j)).to_vec();
    let mut k = 1;
    let mut log_q = 0.0;
    walk_link_path(model, traj, i, j, own[0].value, |state, t0, t1| {
        let mut t = t0;
        loop {
            let rate = model.lambda_network(i) * network_choice_probs(model, state, i)[j];
            let next = own.get(k).map_or(f64::INFINITY, |s| s.start);
            if next >= t1 {
                log_q -= rate * (t1 - t);
                return Ok(());
            }
            log_q += rate.ln() - rate * (next - t);
            state.set_tie(i, j, own[k].value == 1);
            k += 1;
            t = next;
        }
    })?;
    Ok(log_q)
}

/// Visits the intervals between transitions of variables other than `Y_ij`,
/// with the state of the others fixed during each call.
fn walk_link_path<F>(model: &Model, traj: &Trajectory, i: usize, j: usize, initial: i32, mut visit: F) -> Result<()>
where
    F: FnMut(&mut NetworkState, f64, f64) -> Result<()>,
{
    let spec = model.spec();
    let own = spec.var_index(link_var(i, j)).expect("link variable");
    let mut state = NetworkState::from_values(spec, &traj.initial_state())?;
    state.set_tie(i, j, initial == 1);
    let mut t = 0.0;
    for tr in traj.transitions().iter().filter(|tr| tr.var != own) {
        visit(&mut state, t, tr.time)?;
        state.set_value(spec.var_id(tr.var), tr.to)?;
        t = tr.time;
    }
    visit(&mut state, t, traj.t_end())?;
    Ok(())
}

/// One Metropolis–Hastings update: a uniformly chosen `Y_ij` path is
/// replaced by a draw from its conditional intensity given all other paths,
/// with `Y_ij(0) ~ Bernoulli(p0)`. Returns whether the proposal was accepted.
///
/// The target is the full network likelihood times the prior on initial
/// links times the event likelihood. The own-path term of the proposal
/// cancels the initial-value prior, so `ln r = g(σ') − g(σ)` with
/// `g = L(σ) − ln q(σ_ij) + L(O_ij) + L(O_ji)`.
pub fn mh_step<R: Rng + ?Sized>(
    state: &mut MHState,
    model: &Model,
    obs: &ObservationParams,
    events: &EventStream,
    by_pair: &[Vec<f64>],
    config: &MHConfig,
    rng: &mut R,
) -> Result<bool> {
    let n = model.n_actors();
    let p = rng.gen_range(0..n * (n - 1));
    let (i, j) = (p / (n - 1), {
        let r = p % (n - 1);
        if r >= p / (n - 1) { r + 1 } else { r }
    });
    let initial = rng.gen_bool(config.p0) as i32;
    let (path, log_q_new) = sample_link_path(model, &state.current, i, j, initial, rng)?;
    let log_q_old = link_path_log_density(model, &state.current, i, j)?;
    state.iteration += 1;
    let proposed = match state.current.with_path(p, &path) {
        Ok(t) => t,
        // a proposed time coincided with another variable's transition
        Err(_) => return Ok(false),
    };
    let network_new = trajectory_log_likelihood(model, &proposed)?.value;
    let rev = pair_index(n, j, i);
    let fwd_new =
        event_log_likelihood(&by_pair[p], proposed.segments(p), proposed.segments(rev), events.t_end, obs).value;
    let rev_new =
        event_log_likelihood(&by_pair[rev], proposed.segments(rev), proposed.segments(p), events.t_end, obs).value;
    let g_new = network_new - log_q_new + fwd_new + rev_new;
    let g_old = state.network_ll - log_q_old + state.pair_ll[p] + state.pair_ll[rev];
    let log_r = g_new - g_old;
    let accept = if log_r.is_nan() {
        false
    } else {
        log_r >= 0.0 || rng.gen::<f64>().ln() < log_r
    };
    if accept {
        state.current = proposed;
        state.network_ll = network_new;
        state.pair_ll[p] = fwd_new;
        state.pair_ll[rev] = rev_new;
        state.accepted += 1;
    }
    Ok(accept)
}

/// Acceptance log-ratio of moving from `from` to `to`, which differ only in
/// the path of `Y_ij`.
pub fn mh_log_ratio(
    model: &Model,
    obs: &ObservationParams,
    events: &EventStream,
    from: &Trajectory,
    to: &Trajectory,
    i: usize,
    j: usize,
) -> Result<f64> {
    let g = |traj: &Trajectory| -> Result<f64> {
        let n = model.n_actors();
        let by_pair = events.by_pair();
        let (p, rev) = (pair_index(n, i, j), pair_index(n, j, i));
        Ok(trajectory_log_likelihood(model, traj)?.value - link_path_log_density(model, traj, i, j)?
            + event_log_likelihood(&by_pair[p], traj.segments(p), traj.segments(rev), events.t_end, obs).value
            + event_log_likelihood(&by_pair[rev], traj.segments(rev), traj.segments(p), events.t_end, obs).value)
    };
    Ok(g(to)? - g(from)?)
}

#[derive(Debug, Clone)]
pub struct MHRun {
    pub samples: Vec<Trajectory>,
    pub acceptance_rate: f64,
    pub final_state: MHState,
}

/// Runs `n_burn` discarded steps, then keeps every `thin`-th state until
/// `n_samples` are collected.
pub fn mh_run<R: Rng + ?Sized>(
    mut state: MHState,
    model: &Model,
    obs: &ObservationParams,
    events: &EventStream,
    config: &MHConfig,
    rng: &mut R,
) -> Result<MHRun> {
    config.validate()?;
    let by_pair = events.by_pair();
    let start_iter = state.iteration;
    let start_acc = state.accepted;
    for _ in 0..config.n_burn {
        mh_step(&mut state, model, obs, events, &by_pair, config, rng)?;
    }
    let mut samples = Vec::with_capacity(config.n_samples);
    while samples.len() < config.n_samples {
        for _ in 0..config.thin {
            mh_step(&mut state, model, obs, events, &by_pair, config, rng)?;
        }
        samples.push(state.current.clone());
    }
    let steps = state.iteration - start_iter;
    let acceptance_rate = if steps == 0 { 0.0 } else { (state.accepted - start_acc) as f64 / steps as f64 };
    log::info!("mh_run: {steps} steps, acceptance rate {acceptance_rate:.3}");
    Ok(MHRun { samples, acceptance_rate, final_state: state })
}

/// `P(Y_ij(t) = 1)` estimated from samples: `out[g][p]` for grid time `g` and
/// link index `p`.
pub fn posterior_link_marginals(samples: &[Trajectory], n_actors: usize, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let links = n_actors * (n_actors - 1);
    let mut out = vec![vec![0.0; links]; grid.len()];
    for s in samples {
        for (g, &t) in grid.iter().enumerate() {
            if t < 0.0 || t > s.t_end() {
                return Err(Error::InvalidArgument(format!("grid time {t} outside [0, {}]", s.t_end())));
            }
            for p in 0..links {
                out[g][p] += s.value_at(p, t) as f64;
            }
        }
    }
    let m = samples.len() as f64;
    out.iter_mut().flatten().for_each(|x| *x /= m);
    Ok(out)
}
