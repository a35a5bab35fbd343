//! File formats: model definitions, trajectories, snapshots, event streams
//! and the analysis outputs written by the command-line tool.

pub mod events;
pub mod manifest;
pub mod model_file;
pub mod outputs;
pub mod preprocess;
pub mod snapshots;
pub mod trajectory;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use events::{read_events, write_events, EventsMeta};
pub use manifest::{sha256_file, FileDigest, Manifest};
pub use model_file::ModelFile;
pub use outputs::{
    observation_table, parameter_table, read_fitted, write_eval_csv, write_fitted, write_marginals_csv, write_trace_csv,
    FitDiagnostics, FittedParams, ParamEntry,
};
pub use preprocess::{preprocess_events, PreprocessOptions, PreprocessOutput, PreprocessReport, RejectedRow};
pub use snapshots::{read_snapshots, write_snapshots, SnapshotFile};
pub use trajectory::{read_trajectory, sidecar_path, write_trajectory, TrajectoryMeta};

pub(crate) fn parse_error(path: &Path, message: impl std::fmt::Display) -> Error {
    Error::Parse { path: path.display().to_string(), message: message.to_string() }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
