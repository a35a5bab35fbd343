//! Posterior of a hidden link path given end-point evidence, estimated by
//! importance sampling and checked against the exact matrix-exponential
//! answer.
//!
//! `cargo run --example importance_posterior`

use ctsn::ctmp::{Evidence, EvidenceItem, VariableId};
use ctsn::importance::{estimate_with_error, propose_batch, BatchDiagnostics, ProposalConfig};
use ctsn::model::{EffectKind, EffectSpec, Model, ModelParams, ModelSpec, NetworkState};
use ctsn::oracle::point_evidence_posterior;

fn main() -> ctsn::Result<()> {
    let spec = ModelSpec {
        n_actors: 2,
        attributes: vec![],
        effects: vec![EffectSpec::network(EffectKind::Density), EffectSpec::network(EffectKind::Reciprocity)],
    };
    let mut params = ModelParams::neutral(&spec, 0.8, 0.0);
    params.beta_network = vec![-0.5, 1.0];
    let model = Model::new(spec, params)?;
    let x0 = NetworkState::for_spec(model.spec());
    let t_end = 2.0;

    // both ties observed at t_end: 0 → 1 present, 1 → 0 absent
    let y01 = VariableId::Link { from: 0, to: 1 };
    let y10 = VariableId::Link { from: 1, to: 0 };
    let observed = [(y01, 1), (y10, 0)];
    let evidence =
        Evidence::new(observed.iter().map(|&(var, value)| EvidenceItem::Point { time: t_end, var, value }).collect());

    let samples = propose_batch(&model, &x0, &evidence, t_end, &ProposalConfig::default(), 10_000, 42)?;
    println!("{}", BatchDiagnostics::from_samples(&samples).to_json_line());

    println!("   t   importance (± s.e.)   exact");
    for t in [0.25, 0.5, 1.0, 1.5, 1.75] {
        let est = estimate_with_error(|tr| vec![tr.value_at(0, t) as f64], &samples)?;
        let (space, post) = point_evidence_posterior(&model, &x0, &observed, t, t_end)?;
        let exact: f64 = (0..space.len()).filter(|&x| space.state(x).tie(0, 1)).map(|x| post[x]).sum();
        println!("{t:>5}   {:.4} (± {:.4})      {exact:.4}", est.mean[0], est.std_error[0]);
    }
    Ok(())
}
