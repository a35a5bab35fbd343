//! Fit the hidden network model to a simulated five-actor email stream and
//! compare the estimated observation rates with the truth.
//!
//! `cargo run --release --example hidden_em`

use ctsn::estimation::{hidden_mcem_fit, HiddenEMConfig};
use ctsn::hidden::{observation_stats, simulate_events, MHConfig, ObservationParams};
use ctsn::io::{observation_table, parameter_table};
use ctsn::model::{EffectKind, EffectSpec, Model, ModelParams, ModelSpec, NetworkState};
use ctsn::rng::seeded;

fn main() -> ctsn::Result<()> {
    let spec = ModelSpec {
        n_actors: 5,
        attributes: vec![],
        effects: vec![EffectSpec::network(EffectKind::Density), EffectSpec::network(EffectKind::Reciprocity)],
    };
    let mut params = ModelParams::neutral(&spec, 0.02, 0.0);
    params.beta_network = vec![-1.0, 1.0];
    let model = Model::new(spec.clone(), params)?;
    let obs = ObservationParams::new(0.5, 1.0, 2.0, 3.0)?;
    let mut initial = NetworkState::for_spec(&spec);
    for i in 0..5 {
        initial.set_tie(i, (i + 1) % 5, true);
        initial.set_tie((i + 1) % 5, i, true);
    }
    let (truth, events) = simulate_events(&model, &obs, &initial, 150.0, &mut seeded(1))?;
    let (counts, _) = observation_stats(&truth, &events);
    println!("{} events; per context [00, 01, 10, 11]: {counts:?}", events.events.len());

    let config = HiddenEMConfig {
        mh: MHConfig { p0: 0.1, n_burn: 2000, n_samples: 100, thin: 50 },
        n_burn_warm: 500,
        max_outer_iters: 8,
        seed: 1,
        ..HiddenEMConfig::default()
    };
    let fit = hidden_mcem_fit(&spec, &[events], None, &config)?;
    println!("converged: {}", fit.fit.converged);
    for e in parameter_table(&spec, &fit.fit.params).0 {
        println!("{:<8} {:<12} {:>8.3}", e.symbol, e.name, e.value);
    }
    for (e, q) in observation_table(&fit.obs).iter().zip(obs.as_array()) {
        println!("{:<8} {:<12} {:>8.3}   (true {q})", e.symbol, e.name, e.value);
    }
    Ok(())
}
