//! Global intensities and the per-variable conditional intensity matrices
//! extracted from them.

use super::choice::{attribute_choice_probs, network_choice_probs};
use super::params::Model;
use super::state::NetworkState;
use crate::ctmp::{IntensityMatrix, VariableId};
use crate::error::Result;

/// Rate of the full process jumping from `state` to `target`.
///
/// Single tie toggles and unit attribute moves get `λ·P`; `target == state`
/// gets the diagonal `−Σ_i (λᵢⁿ + H·λᵢᵃ)`; anything else is 0.
pub fn global_intensity(model: &Model, state: &NetworkState, target: &NetworkState) -> f64 {
    let n = model.n_actors();
    let mut tie_diff = None;
    let mut attr_diff = None;
    let mut changes = 0usize;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            if state.tie(i, j) != target.tie(i, j) {
                changes += 1;
                tie_diff = Some((i, j));
            }
        }
    }
    for h in 0..model.n_attributes() {
        for i in 0..n {
            let d = target.attr(h, i) - state.attr(h, i);
            if d != 0 {
                changes += 1;
                attr_diff = Some((h, i, d));
            }
        }
    }
    match (changes, tie_diff, attr_diff) {
        (0, _, _) => -model.total_rate(),
        (1, Some((i, j)), None) => model.lambda_network(i) * network_choice_probs(model, state, i)[j],
        (1, None, Some((h, i, d))) if d.abs() == 1 => {
            model.lambda_attribute(i) * attribute_choice_probs(model, state, h, i).prob(d)
        }
        _ => 0.0,
    }
}

/// 2×2 intensity matrix of `Y_ij` given the rest of `state`.
pub fn link_cim(model: &Model, state: &NetworkState, i: usize, j: usize) -> Result<IntensityMatrix> {
    let lambda = model.lambda_network(i);
    let rate_with = |on: bool| {
        let p = if state.tie(i, j) == on {
            network_choice_probs(model, state, i)[j]
        } else {
            let mut s = state.clone();
            s.set_tie(i, j, on);
            network_choice_probs(model, &s, i)[j]
        };
        lambda * p
    };
    let (up, down) = (rate_with(false), rate_with(true));
    IntensityMatrix::from_rates(2, |r, _| if r == 0 { up } else { down })
}

/// Tridiagonal intensity matrix of `Z_hi` over its declared range.
pub fn attribute_cim(model: &Model, state: &NetworkState, h: usize, i: usize) -> Result<IntensityMatrix> {
    let decl = &model.spec().attributes[h];
    let space = decl.space();
    let lambda = model.lambda_attribute(i);
    let rows: Vec<_> = (0..space.card)
        .map(|x| {
            let v = space.value(x);
            if v == state.attr(h, i) {
                attribute_choice_probs(model, state, h, i)
            } else {
                let mut s = state.clone();
                s.set_attr(h, i, v).expect("value within declared range");
                attribute_choice_probs(model, &s, h, i)
            }
        })
        .collect();
    IntensityMatrix::from_rates(space.card, |r, c| {
        if c == r + 1 {
            lambda * rows[r].up
        } else if c + 1 == r {
            lambda * rows[r].down
        } else {
            0.0
        }
    })
}

/// Intensity matrix of any state variable given the rest of `state`.
pub fn variable_cim(model: &Model, state: &NetworkState, var: VariableId) -> Result<IntensityMatrix> {
    match var {
        VariableId::Link { from, to } => link_cim(model, state, from, to),
        VariableId::Attribute { attr, actor } => attribute_cim(model, state, attr, actor),
        VariableId::Obs { .. } => Err(crate::error::Error::InvalidArgument(format!(
            "{var} is not a co-evolution variable"
        ))),
    }
}
