//! Learn the synthetic model from unit-spaced snapshots with Monte Carlo EM
//! and with the method of moments, then score both on held-out trajectories.
//!
//! `cargo run --release --example mcem_vs_mom -- [intervals]`

use std::path::Path;

use ctsn::estimation::{heldout_loglik, mcem_fit, mom_fit, EMConfig, MoMConfig, Snapshots, TrainingData};
use ctsn::io::{parameter_table, ModelFile};
use ctsn::model::{forward_sample, ModelParams, NetworkState};
use ctsn::rng::{seeded, stream};

fn main() -> ctsn::Result<()> {
    let intervals: usize = std::env::args().nth(1).map_or(7, |s| s.parse().expect("number of intervals"));
    let file = ModelFile::read(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/synthetic.json")))?;
    let model = file.model()?;
    let initial = file.initial_state()?;

    let traj = forward_sample(&model, &initial, intervals as f64, &mut seeded(11))?;
    let times: Vec<f64> = (0..=intervals).map(|k| k as f64).collect();
    let states =
        times.iter().map(|&t| NetworkState::from_values(model.spec(), &traj.state_at(t))).collect::<ctsn::Result<_>>()?;
    let snaps = Snapshots::new(times, states)?;
    let test: Vec<_> =
        (0..100).map(|r| forward_sample(&model, &initial, 10.0, &mut stream(99, r))).collect::<ctsn::Result<_>>()?;

    let em = mcem_fit(model.spec(), &TrainingData::Snapshots(vec![snaps.clone()]), None, &EMConfig { seed: 1, ..EMConfig::default() })?;
    let mom = mom_fit(model.spec(), &[snaps], None, &MoMConfig { seed: 1, ..MoMConfig::default() })?;

    let score = |p: &ModelParams| -> ctsn::Result<f64> {
        let ll = heldout_loglik(&model.with_params(p.clone())?, &test)?;
        Ok(ll.iter().map(|l| l.value).sum::<f64>() / ll.len() as f64)
    };
    println!("{:<8} {:<12} {:>8} {:>8} {:>8}", "", "", "truth", "mcem", "mom");
    let rows = |p: &ModelParams| {
        let (mut a, b) = parameter_table(model.spec(), p);
        a.extend(b);
        a
    };
    for ((t, e), m) in rows(model.params()).iter().zip(rows(&em.params)).zip(rows(&mom.params)) {
        println!("{:<8} {:<12} {:>8.3} {:>8.3} {:>8.3}", t.symbol, t.name, t.value, e.value, m.value);
    }
    println!(
        "held-out log-likelihood per trajectory: truth {:.2}, mcem {:.2}, mom {:.2}",
        score(model.params())?,
        score(&em.params)?,
        score(&mom.params)?
    );
    Ok(())
}
