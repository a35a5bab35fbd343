//! Forward-sample the 10-actor synthetic model and record unit-spaced
//! snapshots of the trajectory.
//!
//! `cargo run --example simulate`

use std::path::Path;

use ctsn::estimation::Snapshots;
use ctsn::io::ModelFile;
use ctsn::model::{forward_sample_traced, trajectory_log_likelihood, NetworkState};
use ctsn::rng::seeded;

fn main() -> ctsn::Result<()> {
    let file = ModelFile::read(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/synthetic.json")))?;
    let model = file.model()?;
    let initial = file.initial_state()?;

    let trace = forward_sample_traced(&model, &initial, 10.0, &mut seeded(7))?;
    let traj = &trace.trajectory;
    let links = model.spec().n_links();
    let link_moves = traj.transitions().iter().filter(|t| t.var < links).count();
    println!("{} transitions over [0, 10]: {link_moves} link toggles, {} attribute steps", traj.transitions().len(), traj.transitions().len() - link_moves);
    println!("generation log-density {:.6}", trace.log_density);
    println!("model log-likelihood   {:.6}", trajectory_log_likelihood(&model, traj)?.value);

    let times: Vec<f64> = (0..=10).map(f64::from).collect();
    let states = times
        .iter()
        .map(|&t| NetworkState::from_values(model.spec(), &traj.state_at(t)))
        .collect::<ctsn::Result<Vec<_>>>()?;
    let snaps = Snapshots::new(times, states)?;
    for (t, s) in snaps.times.iter().zip(&snaps.states) {
        let z: Vec<i32> = (0..model.n_actors()).map(|i| s.attr(0, i)).collect();
        println!("t={t:>4}: {:>2} ties, z = {z:?}", s.n_ties());
    }
    let (flips, steps) = snaps.observed_changes(model.spec());
    println!("changes visible in snapshots: {flips} link flips, {steps} attribute steps");
    Ok(())
}
