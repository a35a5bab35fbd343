//! Sufficient statistics `T[x|u]`, `M[x,x'|u]` and the factored trajectory
//! likelihood built from them.

use std::collections::HashMap;
use std::hash::Hash;

use super::intensity::IntensityMatrix;
use super::trajectory::{StateSpace, Trajectory};

/// Durations and transition counts of one variable under one context.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStats {
    /// `T[x|u]`, indexed by state index.
    pub durations: Vec<f64>,
    /// `M[x,x'|u]`, row-major `card × card`. Counts are real-valued so that
    /// weighted expectations can be accumulated in the same type.
    pub counts: Vec<f64>,
    card: usize,
}

impl LocalStats {
    pub fn new(card: usize) -> Self {
        Self { durations: vec![0.0; card], counts: vec![0.0; card * card], card }
    }

    pub fn card(&self) -> usize {
        self.card
    }

    pub fn count(&self, from: usize, to: usize) -> f64 {
        self.counts[from * self.card + to]
    }

    /// `M[x|u] = Σ_{x'≠x} M[x,x'|u]`.
    pub fn exits(&self, from: usize) -> f64 {
        (0..self.card).filter(|&to| to != from).map(|to| self.count(from, to)).sum()
    }
}

/// Per-(variable, context) statistics of a trajectory.
#[derive(Debug, Clone)]
pub struct SufficientStats<C> {
    pub t_end: f64,
    pub spaces: Vec<StateSpace>,
    pub entries: HashMap<(usize, C), LocalStats>,
}

impl<C: Eq + Hash + Clone> SufficientStats<C> {
    pub fn get(&self, var: usize, ctx: &C) -> Option<&LocalStats> {
        self.entries.get(&(var, ctx.clone()))
    }

    /// `Σ_{x,u} T[x|u]` for one variable.
    pub fn total_duration(&self, var: usize) -> f64 {
        self.entries
            .iter()
            .filter(|((v, _), _)| *v == var)
            .map(|(_, s)| s.durations.iter().sum::<f64>())
            .sum()
    }

    /// Statistics restricted to one variable.
    pub fn restrict(&self, var: usize) -> Self {
        Self {
            t_end: self.t_end,
            spaces: self.spaces.clone(),
            entries: self
                .entries
                .iter()
                .filter(|((v, _), _)| *v == var)
                .map(|(k, s)| (k.clone(), s.clone()))
                .collect(),
        }
    }
}

/// Tallies `T` and `M` over a trajectory. `context_fn(var, state)` returns the
/// instantiation of `var`'s parents given the full current state.
pub fn collect_sufficient_stats<C, F>(traj: &Trajectory, mut context_fn: F) -> SufficientStats<C>
where
    C: Eq + Hash + Clone,
    F: FnMut(usize, &[i32]) -> C,
{
    let spaces = traj.spaces().to_vec();
    let mut entries: HashMap<(usize, C), LocalStats> = HashMap::new();
    let mut state = traj.initial_state();
    let mut contexts: Vec<C> = (0..state.len()).map(|v| context_fn(v, &state)).collect();
    let mut t = 0.0;

    let accumulate = |state: &[i32], contexts: &[C], dt: f64, entries: &mut HashMap<(usize, C), LocalStats>| {
        if dt <= 0.0 {
            return;
        }
        for (v, ctx) in contexts.iter().enumerate() {
            let x = spaces[v].index(state[v]);
            entries
                .entry((v, ctx.clone()))
                .or_insert_with(|| LocalStats::new(spaces[v].card))
                .durations[x] += dt;
        }
    };

    for tr in traj.transitions() {
        accumulate(&state, &contexts, tr.time - t, &mut entries);
        let space = traj.spaces()[tr.var];
        let (from, to) = (space.index(tr.from), space.index(tr.to));
        let local = entries
            .entry((tr.var, contexts[tr.var].clone()))
            .or_insert_with(|| LocalStats::new(space.card));
        local.counts[from * space.card + to] += 1.0;
        state[tr.var] = tr.to;
        t = tr.time;
        for (v, ctx) in contexts.iter_mut().enumerate() {
            *ctx = context_fn(v, &state);
        }
    }
    accumulate(&state, &contexts, traj.t_end() - t, &mut entries);
    SufficientStats { t_end: traj.t_end(), spaces: traj.spaces().to_vec(), entries }
}

/// Log-density with a flag set when some recorded transition has zero rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    pub zero_probability: bool,
}

impl LogLikelihood {
    pub const ZERO: LogLikelihood = LogLikelihood { value: 0.0, zero_probability: false };

    pub fn new(value: f64) -> Self {
        Self { value, zero_probability: value == f64::NEG_INFINITY }
    }

    pub fn impossible() -> Self {
        Self { value: f64::NEG_INFINITY, zero_probability: true }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

impl std::ops::Add for LogLikelihood {
    type Output = LogLikelihood;

    fn add(self, rhs: Self) -> Self {
        LogLikelihood {
            value: self.value + rhs.value,
            zero_probability: self.zero_probability || rhs.zero_probability,
        }
    }
}

impl std::iter::Sum for LogLikelihood {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(LogLikelihood::ZERO, |a, b| a + b)
    }
}

/// Local likelihood of one variable under one context:
/// `Σ_x M[x|u] ln q_x − q_x T[x|u] + Σ_{x'≠x} M[x,x'|u] ln θ_{xx'}`.
pub fn local_log_likelihood(stats: &LocalStats, cim: &IntensityMatrix) -> LogLikelihood {
    let mut total = LogLikelihood::ZERO;
    for x in 0..stats.card() {
        let q = cim.exit_rate(x);
        let exits = stats.exits(x);
        total.value -= q * stats.durations[x];
        if exits > 0.0 {
            if q <= 0.0 {
                return LogLikelihood::impossible();
            }
            total.value += exits * q.ln();
            for to in (0..stats.card()).filter(|&to| to != x) {
                let m = stats.count(x, to);
                if m > 0.0 {
                    let theta = cim.jump_probability(x, to);
                    if theta <= 0.0 {
                        return LogLikelihood::impossible();
                    }
                    total.value += m * theta.ln();
                }
            }
        }
    }
    total
}

/// Factored trajectory log-likelihood (starting distribution omitted).
/// `cim(var, ctx)` supplies the intensity matrix of `var` under context `ctx`.
pub fn log_likelihood<C, F>(stats: &SufficientStats<C>, mut cim: F) -> LogLikelihood
where
    C: Eq + Hash + Clone,
    F: FnMut(usize, &C) -> IntensityMatrix,
{
    // Deterministic order: the hash map iteration order is not.
    let mut keys: Vec<&(usize, C)> = stats.entries.keys().collect();
    keys.sort_by_key(|k| k.0);
    let mut total = LogLikelihood::ZERO;
    for key in keys {
        let local = &stats.entries[key];
        let term = local_log_likelihood(local, &cim(key.0, &key.1));
        if term.zero_probability {
            return LogLikelihood::impossible();
        }
        total = total + term;
    }
    total
}
