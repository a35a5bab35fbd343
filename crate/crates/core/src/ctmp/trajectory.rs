use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identity of one process variable.
///
/// The derived ordering (links, then attributes, then observation toggles;
/// lexicographic within a kind) is the canonical scan order used for RNG
/// consumption and tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VariableId {
    /// Tie `Y_ij` from actor `from` to actor `to`.
    Link { from: usize, to: usize },
    /// Attribute `Z_hi`: attribute `attr` of actor `actor`.
    Attribute { attr: usize, actor: usize },
    /// Event toggle `O_ij`.
    Obs { from: usize, to: usize },
}

impl VariableId {
    /// Checks index bounds and the no-self-tie rule.
    pub fn validate(&self, n_actors: usize, n_attributes: usize) -> Result<()> {
        let ok = match *self {
            VariableId::Link { from, to } | VariableId::Obs { from, to } => {
                from != to && from < n_actors && to < n_actors
            }
            VariableId::Attribute { attr, actor } => attr < n_attributes && actor < n_actors,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("variable {self} out of range")))
        }
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VariableId::Link { from, to } => write!(f, "Y[{from},{to}]"),
            VariableId::Attribute { attr, actor } => write!(f, "Z[{attr},{actor}]"),
            VariableId::Obs { from, to } => write!(f, "O[{from},{to}]"),
        }
    }
}

impl std::str::FromStr for VariableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse variable name {s:?}"));
        let s = s.trim();
        let (kind, rest) = s.split_at(s.find('[').ok_or_else(bad)?);
        let inner = rest.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        match kind {
            "Y" => Ok(VariableId::Link { from: a, to: b }),
            "Z" => Ok(VariableId::Attribute { attr: a, actor: b }),
            "O" => Ok(VariableId::Obs { from: a, to: b }),
            _ => Err(bad()),
        }
    }
}

/// Values a variable can take: `min, min+1, …, min+card-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    pub min: i32,
    pub card: usize,
}

impl StateSpace {
    pub const BINARY: StateSpace = StateSpace { min: 0, card: 2 };

    pub fn contains(&self, v: i32) -> bool {
        v >= self.min && ((v - self.min) as usize) < self.card
    }

    pub fn index(&self, v: i32) -> usize {
        debug_assert!(self.contains(v));
        (v - self.min) as usize
    }

    pub fn value(&self, index: usize) -> i32 {
        self.min + index as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub value: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub time: f64,
    /// Index into [`Trajectory::variables`].
    pub var: usize,
    pub from: i32,
    pub to: i32,
}

/// Piecewise-constant path of every variable over `[0, t_end]`.
///
/// Invariants (enforced by [`TrajectoryBuilder`]): per-variable segments
/// tile `[0, t_end)` with strictly increasing starts, consecutive segments
/// differ in value, and no two transitions share a timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    variables: Vec<VariableId>,
    spaces: Vec<StateSpace>,
    t_end: f64,
    segments: Vec<Vec<Segment>>,
    transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn builder(
        variables: Vec<VariableId>,
        spaces: Vec<StateSpace>,
        initial: Vec<i32>,
    ) -> Result<TrajectoryBuilder> {
        TrajectoryBuilder::new(variables, spaces, initial)
    }

    /// Constant trajectory with no transitions.
    pub fn constant(
        variables: Vec<VariableId>,
        spaces: Vec<StateSpace>,
        initial: Vec<i32>,
        t_end: f64,
    ) -> Result<Self> {
        Self::builder(variables, spaces, initial)?.finish(t_end)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn spaces(&self) -> &[StateSpace] {
        &self.spaces
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn segments(&self, var: usize) -> &[Segment] {
        &self.segments[var]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial_state(&self) -> Vec<i32> {
        self.segments.iter().map(|s| s[0].value).collect()
    }

    pub fn final_state(&self) -> Vec<i32> {
        self.segments.iter().map(|s| s[s.len() - 1].value).collect()
    }

    /// Value of `var` at time `t` (right-continuous: a transition at `t`
    /// is already in effect).
    pub fn value_at(&self, var: usize, t: f64) -> i32 {
        let segs = &self.segments[var];
        let idx = segs.partition_point(|s| s.start <= t);
        segs[idx.saturating_sub(1)].value
    }

    pub fn state_at(&self, t: f64) -> Vec<i32> {
        (0..self.variables.len()).map(|v| self.value_at(v, t)).collect()
    }

    /// Number of transitions of `var`.
    pub fn transition_count(&self, var: usize) -> usize {
        self.segments[var].len() - 1
    }

    /// Copy of this trajectory with the path of `var` replaced.
    pub fn with_path(&self, var: usize, path: &[Segment]) -> Result<Self> {
        if path.is_empty() || path[0].start != 0.0 {
            return Err(Error::InvalidTrajectory("replacement path must start at 0".into()));
        }
        let mut initial = self.initial_state();
        initial[var] = path[0].value;
        let mut events: Vec<(f64, usize, i32)> = self
            .transitions
            .iter()
            .filter(|t| t.var != var)
            .map(|t| (t.time, t.var, t.to))
            .collect();
        events.extend(path[1..].iter().map(|s| (s.start, var, s.value)));
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut b = Self::builder(self.variables.clone(), self.spaces.clone(), initial)?;
        for (time, v, to) in events {
            b.push(time, v, to)?;
        }
        b.finish(self.t_end)
    }
}

/// Incremental constructor enforcing the [`Trajectory`] invariants.
#[derive(Debug, Clone)]
pub struct TrajectoryBuilder {
    variables: Vec<VariableId>,
    spaces: Vec<StateSpace>,
    current: Vec<i32>,
    segments: Vec<Vec<Segment>>,
    transitions: Vec<Transition>,
}

impl TrajectoryBuilder {
    fn new(variables: Vec<VariableId>, spaces: Vec<StateSpace>, initial: Vec<i32>) -> Result<Self> {
        if variables.len() != spaces.len() || variables.len() != initial.len() {
            return Err(Error::InvalidTrajectory(format!(
                "{} variables, {} state spaces, {} initial values",
                variables.len(),
                spaces.len(),
                initial.len()
            )));
        }
        for (i, (&v, s)) in initial.iter().zip(&spaces).enumerate() {
            if !s.contains(v) {
                return Err(Error::InvalidTrajectory(format!(
                    "initial value {v} of {} outside its range",
                    variables[i]
                )));
            }
        }
        let segments = initial.iter().map(|&v| vec![Segment { start: 0.0, value: v }]).collect();
        Ok(Self { variables, spaces, current: initial, segments, transitions: Vec::new() })
    }

    pub fn current(&self) -> &[i32] {
        &self.current
    }

    pub fn last_time(&self) -> f64 {
        self.transitions.last().map_or(0.0, |t| t.time)
    }

    /// Appends a transition of `var` to `to` at `time`.
    pub fn push(&mut self, time: f64, var: usize, to: i32) -> Result<()> {
        if var >= self.variables.len() {
            return Err(Error::InvalidTrajectory(format!("variable index {var} out of range")));
        }
        if !(time.is_finite() && time > 0.0) {
            return Err(Error::InvalidTrajectory(format!("transition time {time} must be > 0")));
        }
        if let Some(last) = self.transitions.last() {
            if time <= last.time {
                return Err(Error::InvalidTrajectory(format!(
                    "transition at {time} does not follow {}",
                    last.time
                )));
            }
        }
        let from = self.current[var];
        if from == to {
            return Err(Error::InvalidTrajectory(format!(
                "self-transition of {} at {time}",
                self.variables[var]
            )));
        }
        if !self.spaces[var].contains(to) {
            return Err(Error::InvalidTrajectory(format!(
                "value {to} of {} outside its range",
                self.variables[var]
            )));
        }
        self.current[var] = to;
        self.segments[var].push(Segment { start: time, value: to });
        self.transitions.push(Transition { time, var, from, to });
        Ok(())
    }

    pub fn finish(self, t_end: f64) -> Result<Trajectory> {
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidTrajectory(format!("t_end {t_end}")));
        }
        if let Some(last) = self.transitions.last() {
            if last.time >= t_end {
                return Err(Error::InvalidTrajectory(format!(
                    "transition at {} not before t_end {t_end}",
                    last.time
                )));
            }
        }
        Ok(Trajectory {
            variables: self.variables,
            spaces: self.spaces,
            t_end,
            segments: self.segments,
            transitions: self.transitions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_binary() -> TrajectoryBuilder {
        Trajectory::builder(vec![VariableId::Link { from: 0, to: 1 }], vec![StateSpace::BINARY], vec![0])
            .unwrap()
    }

    #[test]
    fn ordering_is_links_then_attributes() {
        let mut v = vec![
            VariableId::Attribute { attr: 0, actor: 0 },
            VariableId::Link { from: 1, to: 0 },
            VariableId::Obs { from: 0, to: 1 },
            VariableId::Link { from: 0, to: 1 },
        ];
        v.sort();
        assert_eq!(v[0], VariableId::Link { from: 0, to: 1 });
        assert_eq!(v[2], VariableId::Attribute { attr: 0, actor: 0 });
    }

    #[test]
    fn names_round_trip() {
        for v in [
            VariableId::Link { from: 3, to: 11 },
            VariableId::Attribute { attr: 0, actor: 9 },
            VariableId::Obs { from: 1, to: 0 },
        ] {
            assert_eq!(v.to_string().parse::<VariableId>().unwrap(), v);
        }
        assert!("Q[1,2]".parse::<VariableId>().is_err());
        assert!(VariableId::Link { from: 2, to: 2 }.validate(3, 0).is_err());
    }

    #[test]
    fn builder_rejects_invariant_violations() {
        let mut b = one_binary();
        b.push(1.0, 0, 1).unwrap();
        assert!(b.clone().push(1.0, 0, 0).is_err(), "tie");
        assert!(b.clone().push(2.0, 0, 1).is_err(), "self transition");
        assert!(b.clone().push(2.0, 0, 2).is_err(), "range");
        assert!(b.clone().finish(1.0).is_err(), "transition at t_end");
        let t = b.finish(3.0).unwrap();
        assert_eq!(t.value_at(0, 0.5), 0);
        assert_eq!(t.value_at(0, 1.0), 1);
        assert_eq!(t.final_state(), vec![1]);
    }

    #[test]
    fn replace_path_keeps_others() {
        let vars = vec![VariableId::Link { from: 0, to: 1 }, VariableId::Link { from: 1, to: 0 }];
        let mut b = Trajectory::builder(vars, vec![StateSpace::BINARY; 2], vec![0, 0]).unwrap();
        b.push(1.0, 0, 1).unwrap();
        b.push(2.0, 1, 1).unwrap();
        let t = b.finish(5.0).unwrap();
        let r = t
            .with_path(0, &[Segment { start: 0.0, value: 1 }, Segment { start: 3.0, value: 0 }])
            .unwrap();
        assert_eq!(r.segments(1), t.segments(1));
        assert_eq!(r.value_at(0, 2.5), 1);
        assert_eq!(r.value_at(0, 3.5), 0);
        assert_eq!(r.transitions().len(), 2);
    }
}
