//! Flattened joint state space over a subset of model variables, used as an
//! exact oracle for small systems.

use super::cim::variable_cim;
use super::params::Model;
use super::state::NetworkState;
use crate::ctmp::{IntensityMatrix, StateSpace, VariableId};
use crate::error::{Error, Result};

pub const DEFAULT_STATE_CAP: usize = 4096;

/// Mixed-radix enumeration of the joint values of `variables`, with every
/// other variable pinned to its value in `base`.
#[derive(Debug, Clone)]
pub struct JointSpace {
    variables: Vec<VariableId>,
    positions: Vec<usize>,
    spaces: Vec<StateSpace>,
    base: NetworkState,
    len: usize,
}

impl JointSpace {
    pub fn new(model: &Model, variables: &[VariableId], base: &NetworkState, cap: usize) -> Result<Self> {
        let spec = model.spec();
        let all_spaces = spec.spaces();
        let mut positions = Vec::with_capacity(variables.len());
        let mut spaces = Vec::with_capacity(variables.len());
        let mut len: usize = 1;
        for &v in variables {
            let pos = spec
                .var_index(v)
                .ok_or_else(|| Error::InvalidArgument(format!("{v} is not a model variable")))?;
            if positions.contains(&pos) {
                return Err(Error::InvalidArgument(format!("{v} listed twice")));
            }
            positions.push(pos);
            spaces.push(all_spaces[pos]);
            len = len.saturating_mul(all_spaces[pos].card);
            if len > cap {
                return Err(Error::StateSpaceTooLarge { states: len, cap });
            }
        }
        Ok(Self { variables: variables.to_vec(), positions, spaces, base: base.clone(), len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn state(&self, x: usize) -> NetworkState {
        let mut s = self.base.clone();
        let mut rem = x;
        for (k, &v) in self.variables.iter().enumerate() {
            let card = self.spaces[k].card;
            s.set_value(v, self.spaces[k].value(rem % card)).expect("value within range");
            rem /= card;
        }
        s
    }

    pub fn index_of(&self, state: &NetworkState) -> usize {
        self.fold(|k| state.value(self.variables[k]))
    }

    /// Index of a full value vector laid out in model-variable order.
    pub fn index_of_values(&self, values: &[i32]) -> usize {
        self.fold(|k| values[self.positions[k]])
    }

    fn fold(&self, value: impl Fn(usize) -> i32) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (k, space) in self.spaces.iter().enumerate() {
            idx += space.index(value(k)) * stride;
            stride *= space.card;
        }
        idx
    }
}

/// Generator of the joint process over `variables`; single-variable moves get
/// the model's CIM rate, everything else 0.
pub fn build_joint_generator(
    model: &Model,
    variables: &[VariableId],
    base: &NetworkState,
    cap: usize,
) -> Result<(JointSpace, IntensityMatrix)> {
    let space = JointSpace::new(model, variables, base, cap)?;
    if space.len() < 2 {
        return Err(Error::InvalidArgument("joint space needs at least two states".into()));
    }
    let mut rates = vec![Vec::new(); space.len()];
    for (x, row) in rates.iter_mut().enumerate() {
        let s = space.state(x);
        for &v in variables {
            let cim = variable_cim(model, &s, v)?;
            let sp = space.spaces[space.variables.iter().position(|&w| w == v).unwrap()];
            let from = sp.index(s.value(v));
            for to in 0..sp.card {
                let r = if to == from { 0.0 } else { cim.rate(from, to) };
                if r > 0.0 {
                    let mut t = s.clone();
                    t.set_value(v, sp.value(to))?;
                    row.push((space.index_of(&t), r));
                }
            }
        }
    }
    let gen = IntensityMatrix::from_rates(space.len(), |r, c| {
        rates[r].iter().filter(|e| e.0 == c).map(|e| e.1).sum()
    })?;
    Ok((space, gen))
}
