//! Clean a raw email log into an event stream: drop self-addressed mail and
//! mass mailings, split multi-recipient mail with jittered times.
//!
//! `cargo run --example preprocess_emails`

use ctsn::io::{preprocess_events, PreprocessOptions};

fn main() -> ctsn::Result<()> {
    let raw = std::fs::File::open(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/raw_emails.csv"))?;
    let out = preprocess_events(raw, &PreprocessOptions { max_recipients: 5, seed: 3, ..PreprocessOptions::default() })?;
    println!("{}", serde_json::to_string_pretty(&out.report)?);
    for r in &out.rejects {
        println!("rejected line {}: {}", r.line, r.reason);
    }
    for e in &out.stream.events {
        println!("{:>12.8}  {} -> {}", e.time, out.roster[e.sender], out.roster[e.recipient]);
    }
    Ok(())
}
