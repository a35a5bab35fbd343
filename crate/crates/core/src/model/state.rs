use serde::{Deserialize, Serialize};

use super::spec::{AttributeDecl, ModelSpec};
use crate::ctmp::VariableId;
use crate::error::{Error, Result};

/// Adjacency matrix `y` plus attribute values `z` at one instant.
///
/// Degrees are maintained incrementally; the diagonal of `y` is never set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkState {
    n: usize,
    y: Vec<u8>,
    z: Vec<i32>,
    attributes: Vec<AttributeDecl>,
    outdeg: Vec<u32>,
    indeg: Vec<u32>,
}

/// Plain serializable form used by snapshot files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    /// `y[i][j]`, diagonal ignored.
    pub y: Vec<Vec<u8>>,
    /// `z[h][i]`.
    #[serde(default)]
    pub z: Vec<Vec<i32>>,
}

impl NetworkState {
    /// Empty network with every attribute at its minimum.
    pub fn empty(n: usize, attributes: &[AttributeDecl]) -> Self {
        let z = attributes.iter().flat_map(|a| std::iter::repeat_n(a.min, n)).collect();
        Self {
            n,
            y: vec![0; n * n],
            z,
            attributes: attributes.to_vec(),
            outdeg: vec![0; n],
            indeg: vec![0; n],
        }
    }

    pub fn for_spec(spec: &ModelSpec) -> Self {
        Self::empty(spec.n_actors, &spec.attributes)
    }

    pub fn from_record(spec: &ModelSpec, rec: &StateRecord) -> Result<Self> {
        let n = spec.n_actors;
        if rec.y.len() != n || rec.y.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!("adjacency matrix must be {n}x{n}")));
        }
        if rec.z.len() != spec.attributes.len() || rec.z.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "attribute matrix must be {}x{n}",
                spec.attributes.len()
            )));
        }
        let mut s = Self::for_spec(spec);
        for i in 0..n {
            for j in 0..n {
                match rec.y[i][j] {
                    0 => {}
                    1 if i != j => s.set_tie(i, j, true),
                    1 => {}
                    v => return Err(Error::InvalidArgument(format!("tie value {v} at ({i},{j})"))),
                }
            }
        }
        for (h, row) in rec.z.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                s.set_attr(h, i, v)?;
            }
        }
        Ok(s)
    }

    pub fn to_record(&self) -> StateRecord {
        StateRecord {
            y: (0..self.n).map(|i| (0..self.n).map(|j| self.y[i * self.n + j]).collect()).collect(),
            z: (0..self.attributes.len())
                .map(|h| (0..self.n).map(|i| self.attr(h, i)).collect())
                .collect(),
        }
    }

    pub fn n_actors(&self) -> usize {
        self.n
    }

    pub fn attributes(&self) -> &[AttributeDecl] {
        &self.attributes
    }

    #[inline]
    pub fn tie(&self, i: usize, j: usize) -> bool {
        self.y[i * self.n + j] != 0
    }

    pub fn set_tie(&mut self, i: usize, j: usize, on: bool) {
        assert!(i != j, "self ties are not part of the network");
        let cell = &mut self.y[i * self.n + j];
        if (*cell != 0) == on {
            return;
        }
        *cell = on as u8;
        if on {
            self.outdeg[i] += 1;
            self.indeg[j] += 1;
        } else {
            self.outdeg[i] -= 1;
            self.indeg[j] -= 1;
        }
    }

    pub fn toggle(&mut self, i: usize, j: usize) {
        let on = !self.tie(i, j);
        self.set_tie(i, j, on);
    }

    #[inline]
    pub fn outdeg(&self, i: usize) -> u32 {
        self.outdeg[i]
    }

    #[inline]
    pub fn indeg(&self, i: usize) -> u32 {
        self.indeg[i]
    }

    #[inline]
    pub fn attr(&self, h: usize, i: usize) -> i32 {
        self.z[h * self.n + i]
    }

    pub fn set_attr(&mut self, h: usize, i: usize, v: i32) -> Result<()> {
        let decl = &self.attributes[h];
        if v < decl.min || v > decl.max {
            return Err(Error::InvalidArgument(format!(
                "value {v} of attribute {} outside [{}, {}]",
                decl.name, decl.min, decl.max
            )));
        }
        self.z[h * self.n + i] = v;
        Ok(())
    }

    /// `sim_ij = 1 − |z_i − z_j| / Range(z)` on attribute `h`.
    #[inline]
    pub fn similarity(&self, h: usize, i: usize, j: usize) -> f64 {
        1.0 - (self.attr(h, i) - self.attr(h, j)).abs() as f64 / self.attributes[h].range()
    }

    pub fn value(&self, v: VariableId) -> i32 {
        match v {
            VariableId::Link { from, to } => self.tie(from, to) as i32,
            VariableId::Attribute { attr, actor } => self.attr(attr, actor),
            VariableId::Obs { .. } => panic!("observation variables are not part of the network state"),
        }
    }

    pub fn set_value(&mut self, v: VariableId, value: i32) -> Result<()> {
        match v {
            VariableId::Link { from, to } => match value {
                0 | 1 => {
                    self.set_tie(from, to, value == 1);
                    Ok(())
                }
                _ => Err(Error::InvalidArgument(format!("tie value {value}"))),
            },
            VariableId::Attribute { attr, actor } => self.set_attr(attr, actor, value),
            VariableId::Obs { .. } => Err(Error::InvalidArgument(format!("{v} is not a state variable"))),
        }
    }

    /// Values in the flat variable order of `spec`.
    pub fn values(&self, spec: &ModelSpec) -> Vec<i32> {
        spec.variables().into_iter().map(|v| self.value(v)).collect()
    }

    pub fn from_values(spec: &ModelSpec, values: &[i32]) -> Result<Self> {
        let mut s = Self::for_spec(spec);
        for (idx, &v) in values.iter().enumerate() {
            s.set_value(spec.var_id(idx), v)?;
        }
        Ok(s)
    }

    pub fn n_ties(&self) -> usize {
        self.outdeg.iter().map(|&d| d as usize).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_track_toggles() {
        let mut s = NetworkState::empty(3, &[]);
        s.set_tie(0, 1, true);
        s.set_tie(0, 2, true);
        s.set_tie(2, 1, true);
        s.set_tie(0, 1, true);
        assert_eq!((s.outdeg(0), s.indeg(1), s.n_ties()), (2, 2, 3));
        s.toggle(0, 1);
        assert_eq!((s.outdeg(0), s.indeg(1)), (1, 1));
    }

    #[test]
    fn attribute_range_enforced() {
        let mut s = NetworkState::empty(2, &[AttributeDecl::new("z", 1, 5)]);
        assert!(s.set_attr(0, 0, 6).is_err());
        s.set_attr(0, 0, 2).unwrap();
        s.set_attr(0, 1, 4).unwrap();
        assert!((s.similarity(0, 0, 1) - 0.5).abs() < 1e-15);
    }
}
