//! Hidden links behind an email stream: simulate events from a two-actor
//! model, sample link paths with Metropolis-Hastings and compare the
//! posterior link probabilities with exact smoothing.
//!
//! `cargo run --release --example hidden_network`

use std::path::Path;

use ctsn::hidden::{
    initial_consistent_trajectory, mh_run, posterior_link_marginals, simulate_events, MHConfig, MHState,
};
use ctsn::io::ModelFile;
use ctsn::model::NetworkState;
use ctsn::oracle::hidden_smoothing_marginals;
use ctsn::rng::seeded;

fn main() -> ctsn::Result<()> {
    let file = ModelFile::read(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/two_actor_hidden.json")))?;
    let model = file.model()?;
    let obs = file.observation.expect("observation rates in the model file");
    let mut rng = seeded(5);
    let (truth, events) = simulate_events(&model, &obs, &NetworkState::for_spec(model.spec()), 10.0, &mut rng)?;
    println!("{} events, {} hidden link changes", events.events.len(), truth.transitions().len());

    let config = MHConfig { p0: 0.1, n_burn: 2000, n_samples: 2000, thin: 50 };
    let start = initial_consistent_trajectory(&model, &events)?;
    let state = MHState::new(&model, &obs, &events, start)?;
    let run = mh_run(state, &model, &obs, &events, &config, &mut rng)?;
    println!("acceptance rate {:.3}", run.acceptance_rate);

    let grid: Vec<f64> = (0..10).map(|k| 0.5 + k as f64).collect();
    let sampled = posterior_link_marginals(&run.samples, 2, &grid)?;
    let exact = hidden_smoothing_marginals(&model, &obs, config.p0, &events, &grid)?;
    println!("    t   true  P(0→1) MH  exact   P(1→0) MH  exact");
    for (g, t) in grid.iter().enumerate() {
        println!(
            "{t:>5}   {}/{}    {:.3}   {:.3}      {:.3}   {:.3}",
            truth.value_at(0, *t),
            truth.value_at(1, *t),
            sampled[g][0],
            exact[g][0],
            sampled[g][1],
            exact[g][1]
        );
    }
    Ok(())
}
