use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctmp::sampling::{ln_one_minus_exp_neg, sample_exponential, sample_truncated_exponential};
use crate::ctmp::{Evidence, EvidenceItem, Trajectory, TrajectoryBuilder, VariableId};
use crate::error::{Error, Result};
use crate::model::simulate::pick_weighted;
use crate::model::{ChoiceCache, Model, NetworkState};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    /// Scale applied to the proposal rates of unconstrained and forced
    /// variables; 1 proposes from the model itself.
    pub kappa: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self { kappa: 0.5 }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kappa > 0.0 && self.kappa <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("kappa must lie in (0, 1], got {}", self.kappa)))
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeightedTrajectory {
    pub traj: Trajectory,
    pub log_weight: f64,
    /// Set when the proposal could not satisfy the evidence; the weight is
    /// then `-inf` and `traj` is only a partial path.
    pub failure: Option<String>,
}

/// A constraint on one variable: `value` on `[start, end]` (`start == end`
/// for a point).
#[derive(Debug, Clone, Copy)]
struct Constraint {
    start: f64,
    end: f64,
    value: i32,
}

#[derive(Debug, Clone, Default)]
struct VarEvidence {
    constraints: Vec<Constraint>,
    /// Known path; transitions at segment starts.
    full: Option<Vec<(f64, i32)>>,
    cursor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Free,
    Forced { until: f64, target: i32 },
    Fixed,
}

impl VarEvidence {
    fn mode(&mut self, t: f64, current: i32) -> Mode {
        if self.full.is_some() {
            return Mode::Fixed;
        }
        while self.cursor < self.constraints.len() && self.constraints[self.cursor].end < t {
            self.cursor += 1;
        }
        for c in &self.constraints[self.cursor..] {
            if c.start <= t && t < c.end {
                return Mode::Fixed;
            }
            if c.start > t {
                return if c.value == current {
                    Mode::Free
                } else {
                    Mode::Forced { until: c.start, target: c.value }
                };
            }
        }
        Mode::Free
    }

    /// Value required at exactly `t`, if any.
    fn required_at(&self, t: f64) -> Option<i32> {
        if let Some(full) = &self.full {
            let idx = full.partition_point(|s| s.0 <= t);
            return Some(full[idx.saturating_sub(1)].1);
        }
        self.constraints.iter().find(|c| c.start <= t && t <= c.end).map(|c| c.value)
    }
}

struct Prepared {
    vars: Vec<VarEvidence>,
    breakpoints: Vec<f64>,
}

fn prepare(model: &Model, evidence: &Evidence, t_end: f64) -> Result<Prepared> {
    evidence.validate(t_end)?;
    let spec = model.spec();
    let mut vars = vec![VarEvidence::default(); spec.n_variables()];
    let mut breakpoints = vec![t_end];
    for item in &evidence.items {
        let v = spec
            .var_index(item.var())
            .ok_or_else(|| Error::InvalidEvidence(format!("{} is not a model variable", item.var())))?;
        let space = spec.spaces()[v];
        match item {
            EvidenceItem::Point { time, value, .. } => {
                check_value(space.contains(*value), item)?;
                vars[v].constraints.push(Constraint { start: *time, end: *time, value: *value });
                breakpoints.push(*time);
            }
            EvidenceItem::Interval { start, end, value, .. } => {
                check_value(space.contains(*value), item)?;
                vars[v].constraints.push(Constraint { start: *start, end: *end, value: *value });
                breakpoints.extend([*start, *end]);
            }
            EvidenceItem::Full { segments, .. } => {
                check_value(segments.iter().all(|s| space.contains(s.value)), item)?;
                if vars[v].full.is_some() {
                    return Err(Error::InvalidEvidence(format!("{} has two full paths", item.var())));
                }
                vars[v].full = Some(segments.iter().map(|s| (s.start, s.value)).collect());
                breakpoints.extend(segments.iter().map(|s| s.start));
            }
        }
    }
    for ve in &mut vars {
        ve.constraints.sort_by(|a, b| a.start.total_cmp(&b.start));
    }
    breakpoints.retain(|&b| b > 0.0 && b <= t_end);
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    Ok(Prepared { vars, breakpoints })
}

fn check_value(ok: bool, item: &EvidenceItem) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidEvidence(format!("value out of range for {}", item.var())))
    }
}

/// Exit rate of each variable in the current state.
fn exit_rates(model: &Model, state: &NetworkState, cache: &mut ChoiceCache, out: &mut [f64]) {
    let n = model.n_actors();
    for i in 0..n {
        let lambda = model.lambda_network(i);
        let probs = cache.network(model, state, i);
        for j in (0..n).filter(|&j| j != i) {
            out[i * (n - 1) + if j < i { j } else { j - 1 }] = lambda * probs[j];
        }
    }
    let base = n * (n - 1);
    for h in 0..model.n_attributes() {
        for i in 0..n {
            out[base + h * n + i] = model.lambda_attribute(i);
        }
    }
}

/// Probability that `var` lands on `to` given that it transitions. A link
/// has a single destination; its exit rate already carries the choice
/// probability.
fn move_prob(model: &Model, state: &NetworkState, cache: &mut ChoiceCache, var: VariableId, to: i32) -> f64 {
    match var {
        VariableId::Link { .. } => {
            if to == 1 - state.value(var) {
                1.0
            } else {
                0.0
            }
        }
        VariableId::Attribute { attr, actor } => {
            let d = to - state.attr(attr, actor);
            if d.abs() == 1 {
                cache.attribute(model, state, attr, actor).prob(d)
            } else {
                0.0
            }
        }
        VariableId::Obs { .. } => 0.0,
    }
}

struct Run<'a> {
    model: &'a Model,
    state: NetworkState,
    cache: ChoiceCache,
    builder: TrajectoryBuilder,
    log_weight: f64,
}

impl Run<'_> {
    fn apply(&mut self, time: f64, v: usize, to: i32) -> Result<()> {
        let var = self.model.spec().var_id(v);
        self.state.set_value(var, to)?;
        self.builder.push(time, v, to)?;
        self.cache.invalidate(self.model, &self.state, var);
        Ok(())
    }
}

/// Draws one trajectory conforming to `evidence`, starting from `initial`
/// (overridden by any evidence at time 0), with its log importance weight.
///
/// Per step every variable is either free (no conflicting upcoming
/// evidence), forced (its value disagrees with its next observation and it
/// must move before then) or fixed (its value is given by the evidence).
/// Free variables share one exponential clock at `κ·Σq`; forced variables
/// draw truncated exponentials at `κ·q` up to their observation time. Steps
/// never cross an evidence time. The weight is the exact density ratio of
/// the model to this proposal.
pub fn propose_trajectory<R: Rng + ?Sized>(
    model: &Model,
    initial: &NetworkState,
    evidence: &Evidence,
    t_end: f64,
    config: &ProposalConfig,
    rng: &mut R,
) -> Result<WeightedTrajectory> {
    config.validate()?;
    let prepared = prepare(model, evidence, t_end)?;
    propose_prepared(model, initial, prepared, t_end, config.kappa, rng)
}

fn propose_prepared<R: Rng + ?Sized>(
    model: &Model,
    initial: &NetworkState,
    prepared: Prepared,
    t_end: f64,
    kappa: f64,
    rng: &mut R,
) -> Result<WeightedTrajectory> {
    let spec = model.spec();
    let Prepared { mut vars, breakpoints } = prepared;
    let n_vars = spec.n_variables();
    let mut state = initial.clone();
    for (v, ve) in vars.iter().enumerate() {
        if let Some(value) = ve.required_at(0.0) {
            state.set_value(spec.var_id(v), value)?;
        }
    }
    let builder = Trajectory::builder(spec.variables(), spec.spaces(), state.values(spec))?;
    let mut run = Run { model, cache: ChoiceCache::new(model), state, builder, log_weight: 0.0 };
    let ln_kappa = kappa.ln();

    let mut q = vec![0.0; n_vars];
    let mut modes = vec![Mode::Free; n_vars];
    let mut full_cursor = vec![1usize; n_vars];
    let mut t = 0.0;
    let mut bp_idx = 0;

    let fail = |run: Run<'_>, msg: String| -> Result<WeightedTrajectory> {
        let traj = run.builder.finish(t_end)?;
        Ok(WeightedTrajectory { traj, log_weight: f64::NEG_INFINITY, failure: Some(msg) })
    };

    while t < t_end {
        let next_bp = breakpoints.get(bp_idx).copied().unwrap_or(t_end);
        exit_rates(model, &run.state, &mut run.cache, &mut q);
        let mut free_total = 0.0;
        for v in 0..n_vars {
            modes[v] = vars[v].mode(t, run.state.value(spec.var_id(v)));
            if modes[v] == Mode::Free {
                free_total += q[v];
            }
        }

        // Candidate draws: the free group first, then forced variables in
        // ascending variable order.
        let mut best_dt = next_bp - t;
        let mut winner: Option<usize> = None;
        let mut free_wins = false;
        if free_total > 0.0 {
            let dt = sample_exponential(kappa * free_total, rng)?;
            if dt < best_dt {
                best_dt = dt;
                free_wins = true;
            }
        }
        let mut forced_draws = Vec::new();
        for v in 0..n_vars {
            if let Mode::Forced { until, .. } = modes[v] {
                if q[v] <= 0.0 {
                    return fail(run, format!("{} must change before {until} but has rate 0", spec.var_id(v)));
                }
                let h = until - t;
                let dt = sample_truncated_exponential(kappa * q[v], h, rng)?;
                forced_draws.push((v, dt, h));
                if dt < best_dt {
                    best_dt = dt;
                    winner = Some(v);
                    free_wins = false;
                }
            }
        }
        let dt = best_dt;

        // Survival terms of every variable over the step.
        run.log_weight -= (1.0 - kappa) * free_total * dt;
        for v in 0..n_vars {
            if modes[v] == Mode::Fixed {
                run.log_weight -= q[v] * dt;
            }
        }
        for &(v, _, h) in &forced_draws {
            if Some(v) != winner {
                let kq = kappa * q[v];
                let ln_survival = -kq * dt + ln_one_minus_exp_neg(kq * (h - dt)) - ln_one_minus_exp_neg(kq * h);
                run.log_weight += -q[v] * dt - ln_survival;
            }
        }

        if free_wins || winner.is_some() {
            let mut time = t + dt;
            if time <= run.builder.last_time() {
                time = run.builder.last_time().next_up();
            }
            let (v, to) = if free_wins {
                let free_q = (0..n_vars).map(|v| if modes[v] == Mode::Free { q[v] } else { 0.0 });
                let v = pick_weighted(free_q, free_total, rng.gen::<f64>());
                let var = spec.var_id(v);
                let to = match var {
                    VariableId::Attribute { attr, actor } => {
                        let mv = run.cache.attribute(model, &run.state, attr, actor);
                        let z = run.state.attr(attr, actor);
                        if rng.gen::<f64>() * (mv.up + mv.down) >= mv.down {
                            z + 1
                        } else {
                            z - 1
                        }
                    }
                    _ => 1 - run.state.value(var),
                };
                run.log_weight -= ln_kappa;
                (v, to)
            } else {
                let v = winner.expect("forced winner");
                let Mode::Forced { until, target } = modes[v] else { unreachable!() };
                let h = until - t;
                if time >= until {
                    return fail(run, format!("{} could not reach its evidence before {until}", spec.var_id(v)));
                }
                let var = spec.var_id(v);
                let current = run.state.value(var);
                let (to, proposal_p) = match var {
                    VariableId::Attribute { attr, actor } => {
                        let mv = run.cache.attribute(model, &run.state, attr, actor);
                        let toward = if target > current { 1 } else { -1 };
                        let p_up = 0.5 * mv.up + if toward == 1 { 0.5 } else { 0.0 };
                        if rng.gen::<f64>() < p_up {
                            (current + 1, p_up)
                        } else {
                            (current - 1, 1.0 - p_up)
                        }
                    }
                    _ => (1 - current, 1.0),
                };
                let theta = move_prob(model, &run.state, &mut run.cache, var, to);
                let kq = kappa * q[v];
                // ln[qθe^{-qΔt}] − ln[κq e^{-κqΔt} / (1−e^{-κqh}) · p̃]
                run.log_weight += theta.ln() - proposal_p.ln() - ln_kappa - (1.0 - kappa) * q[v] * dt
                    + ln_one_minus_exp_neg(kq * h);
                (v, to)
            };
            if time >= t_end || (bp_idx < breakpoints.len() && time >= next_bp) {
                return fail(run, "transition time collided with an evidence time".into());
            }
            run.apply(time, v, to)?;
            t = time;
            continue;
        }

        // Reached an evidence time.
        t = next_bp;
        bp_idx += 1;
        if t >= t_end {
            break;
        }
        for v in 0..n_vars {
            if let Some(full) = &vars[v].full {
                let k = full_cursor[v];
                if k < full.len() && full[k].0 == t {
                    let to = full[k].1;
                    full_cursor[v] += 1;
                    let var = spec.var_id(v);
                    let rate = q[v] * move_prob(model, &run.state, &mut run.cache, var, to);
                    if rate <= 0.0 {
                        run.log_weight = f64::NEG_INFINITY;
                    } else {
                        run.log_weight += rate.ln();
                    }
                    if t <= run.builder.last_time() {
                        return Err(Error::InvalidEvidence(format!("two observed transitions at time {t}")));
                    }
                    run.apply(t, v, to)?;
                }
            }
        }
        if let Some(msg) = check_required(&vars, &run.state, spec, t) {
            return fail(run, msg);
        }
    }
    if let Some(msg) = check_required(&vars, &run.state, spec, t_end) {
        return fail(run, msg);
    }
    let traj = run.builder.finish(t_end)?;
    Ok(WeightedTrajectory { traj, log_weight: run.log_weight, failure: None })
}

fn check_required(vars: &[VarEvidence], state: &NetworkState, spec: &crate::model::ModelSpec, t: f64) -> Option<String> {
    for (v, ve) in vars.iter().enumerate() {
        if let Some(req) = ve.required_at(t) {
            let var = spec.var_id(v);
            if state.value(var) != req {
                return Some(format!("{var} is {} at {t}, evidence says {req}", state.value(var)));
            }
        }
    }
    None
}

/// `n` independent proposals; sample `k` uses RNG stream `k` of `seed`.
pub fn propose_batch(
    model: &Model,
    initial: &NetworkState,
    evidence: &Evidence,
    t_end: f64,
    config: &ProposalConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<WeightedTrajectory>> {
    config.validate()?;
    let prepared = prepare(model, evidence, t_end)?;
    (0..n)
        .into_par_iter()
        .map(|k| {
            let p = Prepared { vars: prepared.vars.clone(), breakpoints: prepared.breakpoints.clone() };
            propose_prepared(model, initial, p, t_end, config.kappa, &mut stream(seed, k as u64))
        })
        .collect()
}
