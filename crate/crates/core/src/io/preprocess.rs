use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hidden::{Event, EventStream};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    /// Rows with more distinct recipients than this are dropped.
    pub max_recipients: usize,
    /// Half-width of the uniform jitter applied to expanded events.
    pub jitter: f64,
    /// Keep only rows with `start <= time <= end`; time is shifted so that
    /// `start` becomes 0.
    pub window: Option<(f64, f64)>,
    /// Optional roster rule: keep actors who sent at least this many events…
    pub min_sent: Option<usize>,
    /// …and received at least this many.
    pub min_received: Option<usize>,
    pub seed: u64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self { max_recipients: 5, jitter: 1e-5, window: None, min_sent: None, min_received: None, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub raw_rows: usize,
    pub kept_rows: usize,
    pub dropped_self: usize,
    pub dropped_threshold: usize,
    pub dropped_window: usize,
    pub rejected: usize,
    /// Self-addressed entries removed from rows that had other recipients.
    pub self_recipients_removed: usize,
    /// Rows with several recipients, split into single-recipient events.
    pub expanded_rows: usize,
    pub events_before_roster: usize,
    pub events_dropped_roster: usize,
    pub events: usize,
    pub actors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: usize,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone)]
pub struct PreprocessOutput {
    pub stream: EventStream,
    pub roster: Vec<String>,
    pub report: PreprocessReport,
    pub rejects: Vec<RejectedRow>,
}

struct RawEvent {
    time: f64,
    sender: String,
    recipient: String,
}

/// Turns raw `time,sender,recipients` rows (recipients separated by `;`)
/// into an event stream.
///
/// Self-addressed rows are dropped, rows with more than `max_recipients`
/// recipients are dropped, the rest are split into single-recipient events
/// whose times get independent uniform jitter. The roster is every actor
/// left after filtering unless `min_sent`/`min_received` select the actors
/// meeting both thresholds. Unparseable rows are collected, not fatal.
pub fn preprocess_events<R: Read>(input: R, options: &PreprocessOptions) -> Result<PreprocessOutput> {
    if !(options.jitter >= 0.0 && options.jitter.is_finite()) || options.max_recipients == 0 {
        return Err(Error::InvalidArgument("jitter must be >= 0 and max_recipients >= 1".into()));
    }
    if let Some((a, b)) = options.window {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidArgument(format!("bad window [{a}, {b}]")));
        }
    }
    let mut rng = seeded(options.seed);
    let mut report = PreprocessReport::default();
    let mut rejects = Vec::new();
    let mut raw_events = Vec::new();
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        report.raw_rows += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                report.rejected += 1;
                rejects.push(RejectedRow { line, reason: e.to_string(), raw: String::new() });
                continue;
            }
        };
        let raw = rec.iter().collect::<Vec<_>>().join(",");
        let mut reject = |reason: String| {
            report.rejected += 1;
            rejects.push(RejectedRow { line, reason, raw: raw.clone() });
        };
        if rec.len() != 3 {
            reject(format!("expected 3 fields, found {}", rec.len()));
            continue;
        }
        let time: f64 = match rec[0].parse() {
            Ok(t) if f64::is_finite(t) => t,
            _ => {
                reject(format!("bad time {:?}", &rec[0]));
                continue;
            }
        };
        let sender = rec[1].to_string();
        let recipients: BTreeSet<String> =
            rec[2].split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        if sender.is_empty() || recipients.is_empty() {
            reject("empty sender or recipient list".into());
            continue;
        }
        if let Some((a, b)) = options.window {
            if time < a || time > b {
                report.dropped_window += 1;
                continue;
            }
        }
        let others: Vec<String> = recipients.iter().filter(|r| **r != sender).cloned().collect();
        if others.is_empty() {
            report.dropped_self += 1;
            continue;
        }
        if recipients.len() > options.max_recipients {
            report.dropped_threshold += 1;
            continue;
        }
        report.self_recipients_removed += recipients.len() - others.len();
        report.kept_rows += 1;
        let expand = others.len() > 1;
        if expand {
            report.expanded_rows += 1;
        }
        for r in others {
            let t = if expand { time + rng.gen_range(-options.jitter..=options.jitter) } else { time };
            raw_events.push(RawEvent { time: t, sender: sender.clone(), recipient: r });
        }
    }
    report.events_before_roster = raw_events.len();

    let mut sent: BTreeMap<&str, usize> = BTreeMap::new();
    let mut received: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &raw_events {
        *sent.entry(&e.sender).or_default() += 1;
        *received.entry(&e.recipient).or_default() += 1;
    }
    let everyone: BTreeSet<&str> = sent.keys().chain(received.keys()).copied().collect();
    let roster: Vec<String> = everyone
        .into_iter()
        .filter(|a| {
            options.min_sent.map_or(true, |m| sent.get(a).copied().unwrap_or(0) >= m)
                && options.min_received.map_or(true, |m| received.get(a).copied().unwrap_or(0) >= m)
        })
        .map(String::from)
        .collect();
    let index: BTreeMap<&str, usize> = roster.iter().enumerate().map(|(k, a)| (a.as_str(), k)).collect();

    let origin = match options.window {
        Some((a, _)) => a,
        None => raw_events.iter().map(|e| e.time).fold(f64::INFINITY, f64::min),
    };
    let mut events: Vec<Event> = raw_events
        .iter()
        .filter_map(|e| {
            let (s, r) = (index.get(e.sender.as_str())?, index.get(e.recipient.as_str())?);
            Some(Event { time: (e.time - origin).max(0.0), sender: *s, recipient: *r })
        })
        .collect();
    report.events_dropped_roster = raw_events.len() - events.len();
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.sender.cmp(&b.sender)).then(a.recipient.cmp(&b.recipient)));
    for k in 1..events.len() {
        if events[k].time <= events[k - 1].time {
            events[k].time = events[k - 1].time.next_up();
        }
    }
    let last = events.last().map_or(0.0, |e| e.time);
    let t_end = match options.window {
        Some((a, b)) => (b - a).max(last),
        None => last + options.jitter.max(1e-9) + f64::EPSILON * last.abs(),
    };
    report.events = events.len();
    report.actors = roster.len();
    if roster.len() < 2 {
        return Err(Error::InvalidArgument(format!("only {} actors left after filtering", roster.len())));
    }
    let stream = EventStream::new(roster.len(), t_end, events)?;
    Ok(PreprocessOutput { stream, roster, report, rejects })
}
