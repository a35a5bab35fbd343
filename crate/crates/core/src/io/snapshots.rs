use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_error, read_json, write_json};
use crate::error::Result;
use crate::estimation::Snapshots;
use crate::model::{ModelSpec, NetworkState, StateRecord};

/// Snapshot file: full `(y, z)` observations at increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub time_unit: String,
    pub times: Vec<f64>,
    pub states: Vec<StateRecord>,
}

pub fn write_snapshots(path: &Path, snaps: &Snapshots, time_unit: &str) -> Result<()> {
    write_json(
        path,
        &SnapshotFile {
            time_unit: time_unit.to_string(),
            times: snaps.times.clone(),
            states: snaps.states.iter().map(NetworkState::to_record).collect(),
        },
    )
}

pub fn read_snapshots(path: &Path, spec: &ModelSpec) -> Result<(Snapshots, String)> {
    let f: SnapshotFile = read_json(path)?;
    let states = f
        .states
        .iter()
        .enumerate()
        .map(|(k, r)| NetworkState::from_record(spec, r).map_err(|e| parse_error(path, format!("state {k}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let s = Snapshots::new(f.times, states).map_err(|e| parse_error(path, e))?;
    Ok((s, f.time_unit))
}
