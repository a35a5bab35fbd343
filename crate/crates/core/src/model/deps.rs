//! Context-sensitive dependency structure.
//!
//! Which variables a CIM reads changes with the state: an attribute
//! similarity term of actor `i` reads `Z_hj` only while `y_ij = 1`.

use std::collections::BTreeSet;

use super::params::Model;
use super::spec::EffectKind;
use super::state::NetworkState;
use crate::ctmp::VariableId;

/// Variables (other than `var`) whose current value enters `var`'s CIM.
pub fn dependency_set(model: &Model, state: &NetworkState, var: VariableId) -> BTreeSet<VariableId> {
    let n = model.n_actors();
    let mut out = BTreeSet::new();
    let link = |from, to| VariableId::Link { from, to };
    match var {
        VariableId::Link { from: i, .. } => {
            if !model.net.is_empty() {
                // every toggle target's sign enters the normalizer
                for k in (0..n).filter(|&k| k != i) {
                    out.insert(link(i, k));
                }
            }
            for e in &model.net {
                match e.kind {
                    EffectKind::Reciprocity => {
                        for k in (0..n).filter(|&k| k != i) {
                            out.insert(link(k, i));
                        }
                    }
                    EffectKind::Similarity => {
                        for k in 0..n {
                            out.insert(VariableId::Attribute { attr: e.attr, actor: k });
                        }
                    }
                    EffectKind::Activity => {
                        for k in (0..n).filter(|&k| k != i) {
                            for m in (0..n).filter(|&m| m != k) {
                                out.insert(link(k, m));
                            }
                        }
                    }
                    EffectKind::Popularity => {
                        for k in (0..n).filter(|&k| k != i) {
                            for m in (0..n).filter(|&m| m != k) {
                                out.insert(link(m, k));
                            }
                        }
                    }
                    EffectKind::Density | EffectKind::Tendency => {}
                }
            }
        }
        VariableId::Attribute { attr: h, actor: i } => {
            if model.attribute_self_similarity(h) {
                for j in (0..n).filter(|&j| j != i) {
                    out.insert(link(i, j));
                    if state.tie(i, j) {
                        out.insert(VariableId::Attribute { attr: h, actor: j });
                    }
                }
            }
        }
        VariableId::Obs { .. } => {}
    }
    out.remove(&var);
    out
}

/// Decision distributions invalidated by a change of `changed`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Invalidation {
    Network(usize),
    AllNetwork,
    Attribute(usize, usize),
}

/// Inverse of [`dependency_set`]: the cached distributions to refresh after
/// `changed` transitions. `state` is the state after the transition.
pub(crate) fn invalidated_by(model: &Model, state: &NetworkState, changed: VariableId, out: &mut Vec<Invalidation>) {
    out.clear();
    match changed {
        VariableId::Link { from: a, to: b } => {
            if model.has_network(EffectKind::Activity) || model.has_network(EffectKind::Popularity) {
                out.push(Invalidation::AllNetwork);
            } else {
                out.push(Invalidation::Network(a));
                if model.has_network(EffectKind::Reciprocity) {
                    out.push(Invalidation::Network(b));
                }
            }
            for h in 0..model.n_attributes() {
                if model.attribute_self_similarity(h) {
                    out.push(Invalidation::Attribute(h, a));
                }
            }
        }
        VariableId::Attribute { attr: h, actor: b } => {
            if model.network_similarity_on(h) {
                out.push(Invalidation::AllNetwork);
            }
            out.push(Invalidation::Attribute(h, b));
            if model.attribute_self_similarity(h) {
                for i in (0..model.n_actors()).filter(|&i| i != b && state.tie(i, b)) {
                    out.push(Invalidation::Attribute(h, i));
                }
            }
        }
        VariableId::Obs { .. } => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::cim::variable_cim;
    use crate::model::spec::{AttributeDecl, EffectSpec, ModelSpec};
    use crate::model::ModelParams;
    use rand::{Rng, SeedableRng};

    fn model(effects: Vec<EffectSpec>, n: usize) -> Model {
        let spec = ModelSpec { n_actors: n, attributes: vec![AttributeDecl::new("z", 1, 4)], effects };
        let mut p = ModelParams::neutral(&spec, 0.7, 0.4);
        p.beta_network = (0..spec.n_network_effects()).map(|k| 0.3 * k as f64 - 0.5).collect();
        p.beta_attribute = (0..spec.n_attribute_effects()).map(|k| 0.4 + 0.2 * k as f64).collect();
        Model::new(spec, p).unwrap()
    }

    #[test]
    fn density_only_link_set() {
        let m = model(vec![EffectSpec::network(EffectKind::Density)], 4);
        let s = NetworkState::for_spec(m.spec());
        let d = dependency_set(&m, &s, VariableId::Link { from: 1, to: 2 });
        let expected: BTreeSet<_> = [0, 3].iter().map(|&k| VariableId::Link { from: 1, to: k }).collect();
        assert_eq!(d, expected);
    }

    #[test]
    fn attribute_similarity_is_context_sensitive() {
        let m = model(
            vec![EffectSpec::network(EffectKind::Density), EffectSpec::attribute(0, EffectKind::Similarity)],
            4,
        );
        let mut s = NetworkState::for_spec(m.spec());
        let z = VariableId::Attribute { attr: 0, actor: 0 };
        assert!(dependency_set(&m, &s, z).iter().all(|v| matches!(v, VariableId::Link { .. })));
        s.set_tie(0, 2, true);
        assert!(dependency_set(&m, &s, z).contains(&VariableId::Attribute { attr: 0, actor: 2 }));
        assert!(!dependency_set(&m, &s, z).contains(&VariableId::Attribute { attr: 0, actor: 1 }));
    }

    #[test]
    fn network_similarity_reads_every_attribute() {
        // Under the logit normalizer each candidate target's similarity enters,
        // whether or not the tie currently exists.
        let m = model(vec![EffectSpec::network(EffectKind::Similarity)], 3);
        let s = NetworkState::for_spec(m.spec());
        let d = dependency_set(&m, &s, VariableId::Link { from: 0, to: 1 });
        for k in 0..3 {
            assert!(d.contains(&VariableId::Attribute { attr: 0, actor: k }));
        }
    }

    fn random_state(m: &Model, rng: &mut impl Rng) -> NetworkState {
        let n = m.n_actors();
        let mut s = NetworkState::for_spec(m.spec());
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                if rng.gen_bool(0.4) {
                    s.set_tie(i, j, true);
                }
            }
            s.set_attr(0, i, rng.gen_range(1..=4)).unwrap();
        }
        s
    }

    fn flip(s: &mut NetworkState, v: VariableId, rng: &mut impl Rng) {
        match v {
            VariableId::Link { from, to } => s.toggle(from, to),
            VariableId::Attribute { attr, actor } => {
                let z = s.attr(attr, actor);
                let nz = if z == 1 { 2 } else if z == 4 { 3 } else if rng.gen_bool(0.5) { z + 1 } else { z - 1 };
                s.set_attr(attr, actor, nz).unwrap();
            }
            _ => unreachable!(),
        }
    }

    /// A change outside a variable's dependency set leaves its CIM bit-identical.
    #[test]
    fn unrelated_changes_leave_cims_unchanged() {
        let effect_sets = vec![
            vec![EffectSpec::network(EffectKind::Density)],
            vec![EffectSpec::network(EffectKind::Density), EffectSpec::network(EffectKind::Reciprocity)],
            vec![
                EffectSpec::network(EffectKind::Density),
                EffectSpec::network(EffectKind::Similarity),
                EffectSpec::attribute(0, EffectKind::Tendency),
                EffectSpec::attribute(0, EffectKind::Similarity),
            ],
            vec![EffectSpec::network(EffectKind::Activity), EffectSpec::attribute(0, EffectKind::Density)],
            vec![EffectSpec::network(EffectKind::Popularity), EffectSpec::attribute(0, EffectKind::Tendency)],
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for effects in effect_sets {
            let m = model(effects, 4);
            for _ in 0..20 {
                let s = random_state(&m, &mut rng);
                for v in m.spec().variables() {
                    let deps = dependency_set(&m, &s, v);
                    let before = variable_cim(&m, &s, v).unwrap();
                    for w in m.spec().variables() {
                        if w == v || deps.contains(&w) {
                            continue;
                        }
                        let mut t = s.clone();
                        flip(&mut t, w, &mut rng);
                        assert_eq!(variable_cim(&m, &t, v).unwrap(), before, "{v} changed after {w} flipped");
                    }
                }
            }
        }
    }
}
