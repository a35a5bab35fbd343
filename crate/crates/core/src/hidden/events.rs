use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ctmp::sampling::sample_exponential;
use crate::ctmp::{LogLikelihood, Segment, Trajectory, VariableId};
use crate::error::{Error, Result};
use crate::model::{forward_sample, Model, NetworkState};

/// Event intensities `q^obs_{kl}` for a directed pair whose link is in state
/// `k` and whose reverse link is in state `l`; shared by all pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationParams {
    pub q00: f64,
    pub q01: f64,
    pub q10: f64,
    pub q11: f64,
}

impl ObservationParams {
    pub fn new(q00: f64, q01: f64, q10: f64, q11: f64) -> Result<Self> {
        let p = Self { q00, q01, q10, q11 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.as_array();
        if all.iter().any(|q| !(q.is_finite() && *q >= 0.0)) || all.iter().all(|&q| q == 0.0) {
            return Err(Error::InvalidModel(format!("invalid observation rates {all:?}")));
        }
        Ok(())
    }

    pub fn rate(&self, k: i32, l: i32) -> f64 {
        match (k, l) {
            (0, 0) => self.q00,
            (0, _) => self.q01,
            (_, 0) => self.q10,
            _ => self.q11,
        }
    }

    /// `[q00, q01, q10, q11]`.
    pub fn as_array(&self) -> [f64; 4] {
        [self.q00, self.q01, self.q10, self.q11]
    }

    pub fn from_array(q: [f64; 4]) -> Result<Self> {
        Self::new(q[0], q[1], q[2], q[3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub sender: usize,
    pub recipient: usize,
}

/// Time-ordered directed events among `n_actors` over `[0, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    pub n_actors: usize,
    pub t_end: f64,
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new(n_actors: usize, t_end: f64, events: Vec<Event>) -> Result<Self> {
        let s = Self { n_actors, t_end, events };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidEvidence(format!("event stream t_end {}", self.t_end)));
        }
        let mut last = f64::NEG_INFINITY;
        for e in &self.events {
            if e.sender == e.recipient || e.sender >= self.n_actors || e.recipient >= self.n_actors {
                return Err(Error::InvalidEvidence(format!("bad event pair {}->{}", e.sender, e.recipient)));
            }
            if !(e.time >= 0.0 && e.time <= self.t_end) {
                return Err(Error::InvalidEvidence(format!("event time {} outside [0, {}]", e.time, self.t_end)));
            }
            if e.time <= last {
                return Err(Error::InvalidEvidence(format!("event times not strictly increasing at {}", e.time)));
            }
            last = e.time;
        }
        Ok(())
    }

    /// Event times of each directed pair, indexed like the link variables
    /// (`from·(n−1) + to'`).
    pub fn by_pair(&self) -> Vec<Vec<f64>> {
        let n = self.n_actors;
        let mut out = vec![Vec::new(); n * (n - 1)];
        for e in &self.events {
            out[pair_index(n, e.sender, e.recipient)].push(e.time);
        }
        out
    }
}

/// Index of link `(i, j)` among the `n(n−1)` directed pairs.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    i * (n - 1) + if j < i { j } else { j - 1 }
}

/// Piecewise-constant context `(y_ij, y_ji)` as `(start, k, l)` runs.
pub(crate) fn context_runs(y_ij: &[Segment], y_ji: &[Segment]) -> Vec<(f64, i32, i32)> {
    let mut out = Vec::with_capacity(y_ij.len() + y_ji.len());
    let (mut a, mut b) = (0, 0);
    let mut t = 0.0;
    loop {
        out.push((t, y_ij[a].value, y_ji[b].value));
        let na = y_ij.get(a + 1).map_or(f64::INFINITY, |s| s.start);
        let nb = y_ji.get(b + 1).map_or(f64::INFINITY, |s| s.start);
        if na == f64::INFINITY && nb == f64::INFINITY {
            return out;
        }
        if na <= nb {
            a += 1;
        }
        if nb <= na {
            b += 1;
        }
        t = na.min(nb);
    }
}

/// Log-density of the events of one directed pair given the link paths of
/// the pair and its reverse.
pub fn event_log_likelihood(
    times: &[f64],
    y_ij: &[Segment],
    y_ji: &[Segment],
    t_end: f64,
    obs: &ObservationParams,
) -> LogLikelihood {
    let runs = context_runs(y_ij, y_ji);
    let mut total = LogLikelihood::ZERO;
    for (k, run) in runs.iter().enumerate() {
        let end = runs.get(k + 1).map_or(t_end, |r| r.0);
        total.value -= obs.rate(run.1, run.2) * (end - run.0);
    }
    let mut r = 0;
    for &t in times {
        while r + 1 < runs.len() && runs[r + 1].0 <= t {
            r += 1;
        }
        let q = obs.rate(runs[r].1, runs[r].2);
        if q <= 0.0 {
            return LogLikelihood::impossible();
        }
        total.value += q.ln();
    }
    total
}

/// Pooled event counts and context durations over all directed pairs, in
/// `[00, 01, 10, 11]` order.
pub fn observation_stats(traj: &Trajectory, events: &EventStream) -> ([f64; 4], [f64; 4]) {
    let n = events.n_actors;
    let by_pair = events.by_pair();
    let mut counts = [0.0; 4];
    let mut durations = [0.0; 4];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let a = traj.segments(pair_index(n, i, j));
            let b = traj.segments(pair_index(n, j, i));
            let runs = context_runs(a, b);
            for (k, run) in runs.iter().enumerate() {
                let end = runs.get(k + 1).map_or(traj.t_end(), |r| r.0);
                durations[(run.1 * 2 + run.2) as usize] += end - run.0;
            }
            let mut r = 0;
            for &t in &by_pair[pair_index(n, i, j)] {
                while r + 1 < runs.len() && runs[r + 1].0 <= t {
                    r += 1;
                }
                counts[(runs[r].1 * 2 + runs[r].2) as usize] += 1.0;
            }
        }
    }
    (counts, durations)
}

/// Event stream generated on top of a given link trajectory.
pub fn simulate_events_given<R: Rng + ?Sized>(
    traj: &Trajectory,
    n_actors: usize,
    obs: &ObservationParams,
    rng: &mut R,
) -> Result<EventStream> {
    let n = n_actors;
    let mut events = Vec::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let runs = context_runs(traj.segments(pair_index(n, i, j)), traj.segments(pair_index(n, j, i)));
            for (k, run) in runs.iter().enumerate() {
                let end = runs.get(k + 1).map_or(traj.t_end(), |r| r.0);
                let q = obs.rate(run.1, run.2);
                if q <= 0.0 {
                    continue;
                }
                let mut t = run.0;
                loop {
                    t += sample_exponential(q, rng)?;
                    if t >= end {
                        break;
                    }
                    events.push(Event { time: t, sender: i, recipient: j });
                }
            }
        }
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    for k in 1..events.len() {
        if events[k].time <= events[k - 1].time {
            events[k].time = events[k - 1].time.next_up();
        }
    }
    events.retain(|e| e.time <= traj.t_end());
    EventStream::new(n, traj.t_end(), events)
}

/// Samples a link trajectory from `model` and events from it.
pub fn simulate_events<R: Rng + ?Sized>(
    model: &Model,
    obs: &ObservationParams,
    initial: &NetworkState,
    t_end: f64,
    rng: &mut R,
) -> Result<(Trajectory, EventStream)> {
    let traj = forward_sample(model, initial, t_end, rng)?;
    let events = simulate_events_given(&traj, model.n_actors(), obs, rng)?;
    Ok((traj, events))
}

/// Starting point for the sampler: `y_ij ≡ 1` for every pair with an event
/// in either direction, 0 otherwise.
pub fn initial_consistent_trajectory(model: &Model, events: &EventStream) -> Result<Trajectory> {
    let spec = model.spec();
    if events.n_actors != spec.n_actors {
        return Err(Error::InvalidEvidence(format!(
            "event stream has {} actors, model {}",
            events.n_actors, spec.n_actors
        )));
    }
    let mut state = NetworkState::for_spec(spec);
    for e in &events.events {
        state.set_tie(e.sender, e.recipient, true);
        state.set_tie(e.recipient, e.sender, true);
    }
    Trajectory::constant(spec.variables(), spec.spaces(), state.values(spec), events.t_end)
}

pub(crate) fn link_var(i: usize, j: usize) -> VariableId {
    VariableId::Link { from: i, to: j }
}
