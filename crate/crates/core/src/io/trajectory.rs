use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{parse_error, read_json, write_json};
use crate::ctmp::{StateSpace, Trajectory, VariableId};
use crate::error::Result;

/// Everything about a trajectory except its transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub time_unit: String,
    pub t_end: f64,
    pub variables: Vec<String>,
    pub spaces: Vec<StateSpace>,
    pub initial: Vec<i32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    time: f64,
    variable: String,
    from: i32,
    to: i32,
}

/// `data.csv` → `data.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Writes the transitions as `time,variable,from,to` rows and the rest to
/// the sidecar.
pub fn write_trajectory(path: &Path, traj: &Trajectory, time_unit: &str) -> Result<()> {
    let meta = TrajectoryMeta {
        time_unit: time_unit.to_string(),
        t_end: traj.t_end(),
        variables: traj.variables().iter().map(|v| v.to_string()).collect(),
        spaces: traj.spaces().to_vec(),
        initial: traj.initial_state(),
    };
    let mut w = csv::Writer::from_path(path)?;
    if traj.transitions().is_empty() {
        w.write_record(["time", "variable", "from", "to"])?;
    }
    for tr in traj.transitions() {
        w.serialize(Row { time: tr.time, variable: meta.variables[tr.var].clone(), from: tr.from, to: tr.to })?;
    }
    w.flush()?;
    write_json(&sidecar_path(path), &meta)
}

pub fn read_trajectory(path: &Path) -> Result<(Trajectory, TrajectoryMeta)> {
    let meta: TrajectoryMeta = read_json(&sidecar_path(path))?;
    let variables: Vec<VariableId> =
        meta.variables.iter().map(|s| s.parse()).collect::<Result<_>>().map_err(|e| parse_error(path, e))?;
    let index: std::collections::HashMap<VariableId, usize> =
        variables.iter().enumerate().map(|(k, v)| (*v, k)).collect();
    let mut b = Trajectory::builder(variables, meta.spaces.clone(), meta.initial.clone())
        .map_err(|e| parse_error(path, e))?;
    let mut r = csv::Reader::from_path(path)?;
    for (line, row) in r.deserialize::<Row>().enumerate() {
        let at = |e: &dyn std::fmt::Display| parse_error(path, format!("line {}: {e}", line + 2));
        let row = row.map_err(|e| at(&e))?;
        let var: VariableId = row.variable.parse().map_err(|e| at(&e))?;
        let k = *index.get(&var).ok_or_else(|| at(&format!("unknown variable {var}")))?;
        if b.current()[k] != row.from {
            return Err(at(&format!("{var} is {} but the row says it leaves {}", b.current()[k], row.from)));
        }
        b.push(row.time, k, row.to).map_err(|e| at(&e))?;
    }
    let traj = b.finish(meta.t_end).map_err(|e| parse_error(path, e))?;
    Ok((traj, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward_sample, AttributeDecl, EffectKind, EffectSpec, Model, ModelParams, ModelSpec, NetworkState};
    use crate::rng::seeded;

    #[test]
    fn round_trip_is_field_exact() {
        let spec = ModelSpec {
            n_actors: 4,
            attributes: vec![AttributeDecl::new("z", 1, 5)],
            effects: vec![EffectSpec::network(EffectKind::Density), EffectSpec::attribute(0, EffectKind::Tendency)],
        };
        let model = Model::new(spec.clone(), ModelParams::neutral(&spec, 0.7, 0.3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (k, t_end) in [0.0, 3.3, 10.0].into_iter().enumerate() {
            let traj = forward_sample(&model, &NetworkState::for_spec(&spec), t_end, &mut seeded(k as u64)).unwrap();
            let p = dir.path().join(format!("t{k}.csv"));
            write_trajectory(&p, &traj, "day").unwrap();
            let (back, meta) = read_trajectory(&p).unwrap();
            assert_eq!(back, traj);
            assert_eq!(meta.time_unit, "day");
        }
    }

    #[test]
    fn inconsistent_rows_report_their_line() {
        let spec = ModelSpec { n_actors: 2, attributes: vec![], effects: vec![EffectSpec::network(EffectKind::Density)] };
        let traj = Trajectory::constant(spec.variables(), spec.spaces(), vec![0, 0], 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trajectory(&p, &traj, "day").unwrap();
        std::fs::write(&p, "time,variable,from,to\n0.5,\"Y[0,1]\",0,1\n0.7,\"Y[0,1]\",0,1\n").unwrap();
        let msg = read_trajectory(&p).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }
}
