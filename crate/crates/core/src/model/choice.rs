//! Conditional-logit choice probabilities for link and attribute decisions.

use super::effects::{attribute_delta, feasible_moves, network_delta};
use super::params::Model;
use super::state::NetworkState;

/// Softmax with max subtraction. Entries equal to `-inf` get probability 0.
pub fn softmax(utilities: &[f64]) -> Vec<f64> {
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = utilities.iter().map(|u| (u - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Utility of toggling `i → j` relative to the current state, for every `j`
/// (`-inf` at `j = i`).
pub fn network_utilities(model: &Model, state: &NetworkState, i: usize) -> Vec<f64> {
    let beta = &model.params().beta_network;
    (0..state.n_actors())
        .map(|j| {
            if j == i {
                f64::NEG_INFINITY
            } else {
                model.net.iter().map(|e| beta[e.beta_index] * network_delta(e, state, i, j)).sum()
            }
        })
        .collect()
}

/// `P(y⟨i,j⟩ | y, z)` for every `j`; entry `i` is 0 and the rest sum to 1.
pub fn network_choice_probs(model: &Model, state: &NetworkState, i: usize) -> Vec<f64> {
    softmax(&network_utilities(model, state, i))
}

/// Probabilities of moving `z_hi` down or up by one unit. An infeasible move
/// at a range boundary has probability 0 and is left out of the normalizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeMove {
    pub down: f64,
    pub up: f64,
}

impl AttributeMove {
    pub fn prob(&self, delta: i32) -> f64 {
        if delta < 0 {
            self.down
        } else {
            self.up
        }
    }
}

pub fn attribute_utility(model: &Model, state: &NetworkState, h: usize, i: usize, delta: i32) -> f64 {
    let beta = &model.params().beta_attribute;
    model.attr[h]
        .iter()
        .map(|e| beta[e.beta_index] * attribute_delta(e, state, h, i, delta))
        .sum()
}

pub fn attribute_choice_probs(model: &Model, state: &NetworkState, h: usize, i: usize) -> AttributeMove {
    let moves: Vec<i32> = feasible_moves(state, h, i).collect();
    let utils: Vec<f64> = moves.iter().map(|&d| attribute_utility(model, state, h, i, d)).collect();
    let p = softmax(&utils);
    let mut out = AttributeMove { down: 0.0, up: 0.0 };
    for (d, p) in moves.into_iter().zip(p) {
        if d < 0 {
            out.down = p;
        } else {
            out.up = p;
        }
    }
    out
}
