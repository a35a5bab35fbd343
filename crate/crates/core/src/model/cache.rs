use super::choice::{attribute_choice_probs, network_choice_probs, AttributeMove};
use super::deps::{invalidated_by, Invalidation};
use super::params::Model;
use super::state::NetworkState;
use crate::ctmp::VariableId;

/// Per-actor decision distributions, refreshed lazily after transitions
/// according to the dependency structure.
#[derive(Debug, Clone)]
pub struct ChoiceCache {
    n: usize,
    network: Vec<Option<Vec<f64>>>,
    attribute: Vec<Option<AttributeMove>>,
    scratch: Vec<Invalidation>,
}

impl ChoiceCache {
    pub fn new(model: &Model) -> Self {
        let n = model.n_actors();
        Self {
            n,
            network: vec![None; n],
            attribute: vec![None; n * model.n_attributes()],
            scratch: Vec::new(),
        }
    }

    pub fn network(&mut self, model: &Model, state: &NetworkState, i: usize) -> &[f64] {
        self.network[i].get_or_insert_with(|| network_choice_probs(model, state, i))
    }

    pub fn attribute(&mut self, model: &Model, state: &NetworkState, h: usize, i: usize) -> AttributeMove {
        *self.attribute[h * self.n + i].get_or_insert_with(|| attribute_choice_probs(model, state, h, i))
    }

    /// Drops entries that depend on `changed`; `state` is post-transition.
    pub fn invalidate(&mut self, model: &Model, state: &NetworkState, changed: VariableId) {
        let mut scratch = std::mem::take(&mut self.scratch);
        invalidated_by(model, state, changed, &mut scratch);
        for inv in &scratch {
            match *inv {
                Invalidation::Network(i) => self.network[i] = None,
                Invalidation::AllNetwork => self.network.iter_mut().for_each(|e| *e = None),
                Invalidation::Attribute(h, i) => self.attribute[h * self.n + i] = None,
            }
        }
        self.scratch = scratch;
    }

    pub fn clear(&mut self) {
        self.network.iter_mut().for_each(|e| *e = None);
        self.attribute.iter_mut().for_each(|e| *e = None);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec::{AttributeDecl, EffectKind, EffectSpec, ModelSpec};
    use crate::model::ModelParams;
    use rand::{Rng, SeedableRng};

    /// After any single transition the surviving cache entries equal a fresh
    /// evaluation bit for bit.
    #[test]
    fn surviving_entries_are_current() {
        let spec = ModelSpec {
            n_actors: 5,
            attributes: vec![AttributeDecl::new("z", 1, 5)],
            effects: vec![
                EffectSpec::network(EffectKind::Density),
                EffectSpec::network(EffectKind::Reciprocity),
                EffectSpec::network(EffectKind::Similarity),
                EffectSpec::attribute(0, EffectKind::Tendency),
                EffectSpec::attribute(0, EffectKind::Similarity),
            ],
        };
        let mut p = ModelParams::neutral(&spec, 0.5, 0.5);
        p.beta_network = vec![-1.0, 1.5, 1.0];
        p.beta_attribute = vec![0.1, 1.0];
        let m = Model::new(spec, p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut s = NetworkState::for_spec(m.spec());
        let mut cache = ChoiceCache::new(&m);
        for _ in 0..500 {
            for i in 0..5 {
                cache.network(&m, &s, i);
                cache.attribute(&m, &s, 0, i);
            }
            let var = m.spec().var_id(rng.gen_range(0..m.spec().n_variables()));
            match var {
                VariableId::Link { from, to } => s.toggle(from, to),
                VariableId::Attribute { attr, actor } => {
                    let z = s.attr(attr, actor);
                    let nz = if z == 5 || (z > 1 && rng.gen_bool(0.5)) { z - 1 } else { z + 1 };
                    s.set_attr(attr, actor, nz).unwrap();
                }
                _ => unreachable!(),
            }
            cache.invalidate(&m, &s, var);
            for i in 0..5 {
                if let Some(p) = &cache.network[i] {
                    assert_eq!(p, &network_choice_probs(&m, &s, i));
                }
                if let Some(a) = cache.attribute[i] {
                    assert_eq!(a, attribute_choice_probs(&m, &s, 0, i));
                }
            }
        }
    }
}
