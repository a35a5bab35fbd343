//! Exact transition probabilities of a small co-evolution model from its
//! flattened joint generator.
//!
//! `cargo run --example exact_oracle`

use ctsn::ctmp::exact_transition_kernel;
use ctsn::model::{build_joint_generator, AttributeDecl, EffectKind, EffectSpec, Model, ModelParams, ModelSpec, NetworkState};

fn main() -> ctsn::Result<()> {
    let spec = ModelSpec {
        n_actors: 2,
        attributes: vec![AttributeDecl::new("z", 1, 3)],
        effects: vec![
            EffectSpec::network(EffectKind::Density),
            EffectSpec::network(EffectKind::Reciprocity),
            EffectSpec::network(EffectKind::Similarity),
            EffectSpec::attribute(0, EffectKind::Tendency),
            EffectSpec::attribute(0, EffectKind::Similarity),
        ],
    };
    let mut params = ModelParams::neutral(&spec, 0.5, 0.5);
    params.beta_network = vec![-1.0, 1.5, 1.0];
    params.beta_attribute = vec![0.1, 1.0];
    let model = Model::new(spec.clone(), params)?;
    let x0 = NetworkState::for_spec(&spec);

    let (space, q) = build_joint_generator(&model, &spec.variables(), &x0, 4096)?;
    println!("{} joint states; exit rate from the start state {:.3}", space.len(), q.exit_rate(space.index_of(&x0)));
    let start = space.index_of(&x0);
    for t in [0.5, 2.0, 10.0, 50.0] {
        let k = exact_transition_kernel(&q, t);
        let p_tie: f64 = (0..space.len()).filter(|&x| space.state(x).tie(0, 1)).map(|x| k[(start, x)]).sum();
        let p_mutual: f64 =
            (0..space.len()).filter(|&x| space.state(x).tie(0, 1) && space.state(x).tie(1, 0)).map(|x| k[(start, x)]).sum();
        let mean_z: f64 = (0..space.len()).map(|x| k[(start, x)] * space.state(x).attr(0, 0) as f64).sum();
        println!("t={t:>5}: P(0→1) {p_tie:.4}  P(mutual) {p_mutual:.4}  E[z_0] {mean_z:.4}");
    }
    Ok(())
}
