use std::path::Path;

use serde::{Deserialize, Serialize};

use super::trajectory::sidecar_path;
use super::{parse_error, read_json, write_json};
use crate::error::Result;
use crate::hidden::{Event, EventStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventsMeta {
    pub time_unit: String,
    pub n_actors: usize,
    pub t_end: f64,
    /// Actor names by index.
    #[serde(default)]
    pub roster: Vec<String>,
}

/// Writes `time,sender,recipient` rows plus a sidecar with the actor roster.
pub fn write_events(path: &Path, stream: &EventStream, time_unit: &str, roster: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if stream.events.is_empty() {
        w.write_record(["time", "sender", "recipient"])?;
    }
    for e in &stream.events {
        w.serialize(e)?;
    }
    w.flush()?;
    let roster = if roster.is_empty() { (0..stream.n_actors).map(|i| i.to_string()).collect() } else { roster.to_vec() };
    write_json(
        &sidecar_path(path),
        &EventsMeta { time_unit: time_unit.to_string(), n_actors: stream.n_actors, t_end: stream.t_end, roster },
    )
}

pub fn read_events(path: &Path) -> Result<(EventStream, EventsMeta)> {
    let meta: EventsMeta = read_json(&sidecar_path(path))?;
    let mut r = csv::Reader::from_path(path)?;
    let events = r
        .deserialize::<Event>()
        .enumerate()
        .map(|(line, e)| e.map_err(|e| parse_error(path, format!("line {}: {e}", line + 2))))
        .collect::<Result<Vec<_>>>()?;
    let stream = EventStream::new(meta.n_actors, meta.t_end, events).map_err(|e| parse_error(path, e))?;
    Ok((stream, meta))
}
