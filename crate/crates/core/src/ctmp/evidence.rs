use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::trajectory::{Segment, Trajectory, VariableId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EvidenceItem {
    /// `var` has `value` at instant `time`.
    Point { time: f64, var: VariableId, value: i32 },
    /// `var` holds `value` throughout `[start, end]`.
    Interval { var: VariableId, start: f64, end: f64, value: i32 },
    /// The whole path of `var` over `[0, t_end]` is known.
    Full { var: VariableId, segments: Vec<Segment> },
}

impl EvidenceItem {
    pub fn var(&self) -> VariableId {
        match self {
            EvidenceItem::Point { var, .. }
            | EvidenceItem::Interval { var, .. }
            | EvidenceItem::Full { var, .. } => *var,
        }
    }

    /// Value required at time `t`, if this item constrains `t`.
    pub fn value_at(&self, t: f64, t_end: f64) -> Option<i32> {
        match self {
            EvidenceItem::Point { time, value, .. } => (*time == t).then_some(*value),
            EvidenceItem::Interval { start, end, value, .. } => {
                (*start <= t && t <= *end).then_some(*value)
            }
            EvidenceItem::Full { segments, .. } => {
                if t < 0.0 || t > t_end {
                    return None;
                }
                let idx = segments.partition_point(|s| s.start <= t);
                Some(segments[idx.saturating_sub(1)].value)
            }
        }
    }

    /// Times at which this item's constraint is pinned down, used to look for
    /// conflicts with other items on the same variable.
    fn probe_times(&self) -> Vec<f64> {
        match self {
            EvidenceItem::Point { time, .. } => vec![*time],
            EvidenceItem::Interval { start, end, .. } => vec![*start, *end],
            EvidenceItem::Full { segments, .. } => segments.iter().map(|s| s.start).collect(),
        }
    }
}

/// A set of observations of a process over `[0, t_end]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub items: Vec<EvidenceItem>,
}

impl Evidence {
    pub fn new(items: Vec<EvidenceItem>) -> Self {
        Self { items }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items grouped by variable, each group sorted by start time.
    pub fn by_variable(&self) -> BTreeMap<VariableId, Vec<&EvidenceItem>> {
        let mut map: BTreeMap<VariableId, Vec<&EvidenceItem>> = BTreeMap::new();
        for item in &self.items {
            map.entry(item.var()).or_default().push(item);
        }
        for group in map.values_mut() {
            group.sort_by(|a, b| start_of(a).total_cmp(&start_of(b)));
        }
        map
    }

    /// Checks time bounds, value ranges of full paths and pairwise consistency.
    pub fn validate(&self, t_end: f64) -> Result<()> {
        for item in &self.items {
            match item {
                EvidenceItem::Point { time, .. } => {
                    if !(0.0..=t_end).contains(time) {
                        return Err(Error::InvalidEvidence(format!(
                            "point observation at {time} outside [0, {t_end}]"
                        )));
                    }
                }
                EvidenceItem::Interval { start, end, var, .. } => {
                    if !(*start >= 0.0 && start < end && *end <= t_end) {
                        return Err(Error::InvalidEvidence(format!(
                            "interval [{start}, {end}] on {var} must satisfy 0 <= start < end <= {t_end}"
                        )));
                    }
                }
                EvidenceItem::Full { segments, var } => {
                    if segments.first().map(|s| s.start) != Some(0.0) {
                        return Err(Error::InvalidEvidence(format!("path of {var} must start at 0")));
                    }
                    for w in segments.windows(2) {
                        if !(w[1].start > w[0].start && w[1].start < t_end) || w[1].value == w[0].value {
                            return Err(Error::InvalidEvidence(format!(
                                "path of {var} has invalid segment at {}",
                                w[1].start
                            )));
                        }
                    }
                }
            }
        }
        for (var, group) in self.by_variable() {
            for (a_idx, a) in group.iter().enumerate() {
                for b in &group[a_idx + 1..] {
                    for t in a.probe_times().into_iter().chain(b.probe_times()) {
                        if let (Some(x), Some(y)) = (a.value_at(t, t_end), b.value_at(t, t_end)) {
                            if x != y {
                                return Err(Error::InvalidEvidence(format!(
                                    "conflicting observations of {var} at {t}: {x} vs {y}"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn start_of(item: &EvidenceItem) -> f64 {
    match item {
        EvidenceItem::Point { time, .. } => *time,
        EvidenceItem::Interval { start, .. } => *start,
        EvidenceItem::Full { .. } => 0.0,
    }
}

/// Verifies that `traj` agrees with every evidence item.
pub fn validate_trajectory_against_evidence(traj: &Trajectory, evidence: &Evidence) -> Result<()> {
    let index = |v: VariableId| {
        traj.variables()
            .iter()
            .position(|&x| x == v)
            .ok_or_else(|| Error::InvalidEvidence(format!("trajectory has no variable {v}")))
    };
    for item in &evidence.items {
        let var = index(item.var())?;
        let ok = match item {
            EvidenceItem::Point { time, value, .. } => traj.value_at(var, *time) == *value,
            EvidenceItem::Interval { start, end, value, .. } => {
                traj.value_at(var, *start) == *value
                    && traj.segments(var).iter().all(|s| s.start <= *start || s.start > *end)
            }
            EvidenceItem::Full { segments, .. } => traj.segments(var) == segments.as_slice(),
        };
        if !ok {
            return Err(Error::InvalidEvidence(format!(
                "trajectory disagrees with evidence on {}",
                item.var()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmp::trajectory::StateSpace;

    const Y01: VariableId = VariableId::Link { from: 0, to: 1 };

    #[test]
    fn detects_conflicts() {
        let ev = Evidence::new(vec![
            EvidenceItem::Interval { var: Y01, start: 1.0, end: 2.0, value: 1 },
            EvidenceItem::Point { time: 1.5, var: Y01, value: 0 },
        ]);
        assert!(ev.validate(5.0).is_err());
        let ok = Evidence::new(vec![
            EvidenceItem::Interval { var: Y01, start: 1.0, end: 2.0, value: 1 },
            EvidenceItem::Point { time: 2.5, var: Y01, value: 0 },
        ]);
        ok.validate(5.0).unwrap();
        let bad_interval = Evidence::new(vec![EvidenceItem::Interval { var: Y01, start: 2.0, end: 2.0, value: 1 }]);
        assert!(bad_interval.validate(5.0).is_err());
        let late = Evidence::new(vec![EvidenceItem::Interval { var: Y01, start: 2.0, end: 6.0, value: 1 }]);
        assert!(late.validate(5.0).is_err());
    }

    #[test]
    fn checks_trajectories() {
        let mut b = Trajectory::builder(vec![Y01], vec![StateSpace::BINARY], vec![0]).unwrap();
        b.push(1.0, 0, 1).unwrap();
        b.push(3.0, 0, 0).unwrap();
        let t = b.finish(5.0).unwrap();
        let good = Evidence::new(vec![
            EvidenceItem::Point { time: 0.0, var: Y01, value: 0 },
            EvidenceItem::Interval { var: Y01, start: 1.5, end: 2.5, value: 1 },
            EvidenceItem::Point { time: 3.0, var: Y01, value: 0 },
        ]);
        validate_trajectory_against_evidence(&t, &good).unwrap();
        let bad = Evidence::new(vec![EvidenceItem::Interval { var: Y01, start: 0.5, end: 2.5, value: 1 }]);
        assert!(validate_trajectory_against_evidence(&t, &bad).is_err());
        let full = Evidence::new(vec![EvidenceItem::Full { var: Y01, segments: t.segments(0).to_vec() }]);
        validate_trajectory_against_evidence(&t, &full).unwrap();
    }
}
