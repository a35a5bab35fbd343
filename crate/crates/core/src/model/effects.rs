//! Effect statistics `s_ik(y, z)` and their change under a single move.
//!
//! Choice probabilities only need utility differences between alternatives,
//! so the hot paths work with the change of each effect relative to the
//! current state. [`effect_value`] evaluates the raw statistic and serves as
//! the reference the deltas are checked against.

use super::params::Model;
use super::spec::{EffectKind, EffectSpec, ResolvedEffect, Target};
use super::state::NetworkState;

fn attr_of(spec: &EffectSpec) -> usize {
    match (spec.attribute, spec.target) {
        (Some(a), _) => a,
        (None, Target::Attribute(h)) => h,
        (None, Target::Network) => 0,
    }
}

/// `s_ik(y, z)` evaluated from actor `i`'s perspective.
pub fn effect_value(spec: &EffectSpec, i: usize, state: &NetworkState) -> f64 {
    let n = state.n_actors();
    let others = (0..n).filter(move |&j| j != i);
    match spec.kind {
        EffectKind::Density => state.outdeg(i) as f64,
        EffectKind::Reciprocity => others.filter(|&j| state.tie(i, j) && state.tie(j, i)).count() as f64,
        EffectKind::Similarity => {
            let h = attr_of(spec);
            others.filter(|&j| state.tie(i, j)).map(|j| state.similarity(h, i, j)).sum()
        }
        EffectKind::Tendency => state.attr(attr_of(spec), i) as f64,
        EffectKind::Activity => {
            others.filter(|&j| state.tie(i, j)).map(|j| state.outdeg(j) as f64).sum()
        }
        EffectKind::Popularity => {
            others.filter(|&j| state.tie(i, j)).map(|j| state.indeg(j) as f64).sum()
        }
    }
}

/// Change of a network effect of actor `i` when tie `i → j` is toggled.
#[inline]
pub(crate) fn network_delta(e: &ResolvedEffect, state: &NetworkState, i: usize, j: usize) -> f64 {
    let adding = !state.tie(i, j);
    let sign = if adding { 1.0 } else { -1.0 };
    match e.kind {
        EffectKind::Density => sign,
        EffectKind::Reciprocity => {
            if state.tie(j, i) {
                sign
            } else {
                0.0
            }
        }
        EffectKind::Similarity => sign * state.similarity(e.attr, i, j),
        EffectKind::Activity => sign * state.outdeg(j) as f64,
        EffectKind::Popularity => {
            if adding {
                (state.indeg(j) + 1) as f64
            } else {
                -(state.indeg(j) as f64)
            }
        }
        EffectKind::Tendency => 0.0,
    }
}

/// Change of an attribute effect when `z_hi` moves by `delta`.
#[inline]
pub(crate) fn attribute_delta(e: &ResolvedEffect, state: &NetworkState, h: usize, i: usize, delta: i32) -> f64 {
    match e.kind {
        EffectKind::Tendency if e.attr == h => delta as f64,
        EffectKind::Similarity if e.attr == h => {
            let zi = state.attr(h, i);
            let mut acc = 0i64;
            for j in (0..state.n_actors()).filter(|&j| j != i && state.tie(i, j)) {
                let zj = state.attr(h, j);
                acc += ((zi - zj).abs() - (zi + delta - zj).abs()) as i64;
            }
            acc as f64 / state.attributes()[h].range()
        }
        _ => 0.0,
    }
}

/// Effect-change vectors for every toggle target of actor `i`, written into
/// `out` as `(n−1) × K` rows in ascending target order.
pub fn network_features(model: &Model, state: &NetworkState, i: usize, out: &mut Vec<f64>) {
    out.clear();
    for j in (0..state.n_actors()).filter(|&j| j != i) {
        out.extend(model.net.iter().map(|e| network_delta(e, state, i, j)));
    }
}

/// Feasible moves of `z_hi` in the order `[−1, +1]`.
pub fn feasible_moves(state: &NetworkState, h: usize, i: usize) -> impl Iterator<Item = i32> {
    let decl = &state.attributes()[h];
    let z = state.attr(h, i);
    let (lo, hi) = (decl.min, decl.max);
    [-1, 1].into_iter().filter(move |d| z + d >= lo && z + d <= hi)
}

/// Effect-change rows for the feasible moves of `z_hi`; returns the moves.
pub fn attribute_features(model: &Model, state: &NetworkState, h: usize, i: usize, out: &mut Vec<f64>) -> Vec<i32> {
    out.clear();
    let moves: Vec<i32> = feasible_moves(state, h, i).collect();
    for &d in &moves {
        out.extend(model.attr[h].iter().map(|e| attribute_delta(e, state, h, i, d)));
    }
    moves
}
