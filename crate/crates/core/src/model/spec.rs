use serde::{Deserialize, Serialize};

use crate::ctmp::{StateSpace, VariableId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    /// `Σ_j y_ij`
    Density,
    /// `Σ_j y_ij y_ji`
    Reciprocity,
    /// `Σ_j y_ij sim_ij` on one attribute
    Similarity,
    /// `z_i` on one attribute
    Tendency,
    /// `Σ_j y_ij Σ_k y_jk`
    Activity,
    /// `Σ_j y_ij Σ_k y_kj`
    Popularity,
}

impl EffectKind {
    pub fn label(&self) -> &'static str {
        match self {
            EffectKind::Density => "Density",
            EffectKind::Reciprocity => "Reciprocity",
            EffectKind::Similarity => "Similarity",
            EffectKind::Tendency => "Tendency",
            EffectKind::Activity => "Activity",
            EffectKind::Popularity => "Popularity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Network,
    Attribute(usize),
}

/// One term `β_k s_ik(y, z)` of a utility function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EffectSpec {
    pub target: Target,
    pub kind: EffectKind,
    /// Attribute read by `Similarity`/`Tendency`. Defaults to the target
    /// attribute, or to attribute 0 when the model has exactly one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<usize>,
}

impl EffectSpec {
    pub fn network(kind: EffectKind) -> Self {
        Self { target: Target::Network, kind, attribute: None }
    }

    pub fn network_on(kind: EffectKind, attr: usize) -> Self {
        Self { target: Target::Network, kind, attribute: Some(attr) }
    }

    pub fn attribute(h: usize, kind: EffectKind) -> Self {
        Self { target: Target::Attribute(h), kind, attribute: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDecl {
    pub name: String,
    pub min: i32,
    pub max: i32,
}

impl AttributeDecl {
    pub fn new(name: impl Into<String>, min: i32, max: i32) -> Self {
        Self { name: name.into(), min, max }
    }

    pub fn space(&self) -> StateSpace {
        StateSpace { min: self.min, card: (self.max - self.min + 1) as usize }
    }

    /// `Range(z) = z_max − z_min`.
    pub fn range(&self) -> f64 {
        (self.max - self.min) as f64
    }
}

/// Structure of a co-evolution model: actors, attributes and effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_actors: usize,
    #[serde(default)]
    pub attributes: Vec<AttributeDecl>,
    pub effects: Vec<EffectSpec>,
}

/// An effect with its attribute resolved and its position in the `β` vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ResolvedEffect {
    pub kind: EffectKind,
    pub attr: usize,
    pub beta_index: usize,
}

impl ModelSpec {
    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn network_effects(&self) -> impl Iterator<Item = &EffectSpec> {
        self.effects.iter().filter(|e| e.target == Target::Network)
    }

    pub fn attribute_effects(&self) -> impl Iterator<Item = &EffectSpec> {
        self.effects.iter().filter(|e| e.target != Target::Network)
    }

    pub fn n_network_effects(&self) -> usize {
        self.network_effects().count()
    }

    pub fn n_attribute_effects(&self) -> usize {
        self.attribute_effects().count()
    }

    fn resolve_attr(&self, e: &EffectSpec) -> Option<usize> {
        match (e.attribute, e.target) {
            (Some(a), _) => Some(a),
            (None, Target::Attribute(h)) => Some(h),
            (None, Target::Network) if self.attributes.len() == 1 => Some(0),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_actors < 2 {
            return Err(Error::InvalidModel(format!("need at least 2 actors, got {}", self.n_actors)));
        }
        for a in &self.attributes {
            if a.max <= a.min {
                return Err(Error::InvalidModel(format!(
                    "attribute {} needs at least two values, range [{}, {}]",
                    a.name, a.min, a.max
                )));
            }
        }
        for e in &self.effects {
            if let Target::Attribute(h) = e.target {
                if h >= self.attributes.len() {
                    return Err(Error::InvalidModel(format!("effect targets missing attribute {h}")));
                }
            }
            match (e.kind, e.target) {
                (EffectKind::Tendency, Target::Network) => {
                    return Err(Error::InvalidModel("tendency applies only to attributes".into()))
                }
                (EffectKind::Activity | EffectKind::Popularity, Target::Attribute(_)) => {
                    return Err(Error::InvalidModel(format!(
                        "{} applies only to the network",
                        e.kind.label()
                    )))
                }
                _ => {}
            }
            if matches!(e.kind, EffectKind::Similarity | EffectKind::Tendency) {
                match self.resolve_attr(e) {
                    Some(a) if a < self.attributes.len() => {}
                    _ => {
                        return Err(Error::InvalidModel(format!(
                            "{} effect needs a valid attribute index",
                            e.kind.label()
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn resolved_network(&self) -> Vec<ResolvedEffect> {
        self.network_effects()
            .enumerate()
            .map(|(k, e)| ResolvedEffect { kind: e.kind, attr: self.resolve_attr(e).unwrap_or(0), beta_index: k })
            .collect()
    }

    /// Resolved effects per attribute, with indices into the flattened
    /// attribute `β` vector.
    pub(crate) fn resolved_attribute(&self) -> Vec<Vec<ResolvedEffect>> {
        let mut out = vec![Vec::new(); self.attributes.len()];
        for (k, e) in self.attribute_effects().enumerate() {
            if let Target::Attribute(h) = e.target {
                out[h].push(ResolvedEffect {
                    kind: e.kind,
                    attr: self.resolve_attr(e).unwrap_or(h),
                    beta_index: k,
                });
            }
        }
        out
    }

    pub fn n_links(&self) -> usize {
        self.n_actors * (self.n_actors - 1)
    }

    pub fn n_variables(&self) -> usize {
        self.n_links() + self.attributes.len() * self.n_actors
    }

    /// Flat index of a variable: links `(i, j)` in row order, then
    /// attributes `(h, i)`. Matches the [`VariableId`] ordering.
    pub fn var_index(&self, v: VariableId) -> Option<usize> {
        let n = self.n_actors;
        match v {
            VariableId::Link { from, to } if from != to && from < n && to < n => {
                Some(from * (n - 1) + if to < from { to } else { to - 1 })
            }
            VariableId::Attribute { attr, actor } if attr < self.attributes.len() && actor < n => {
                Some(self.n_links() + attr * n + actor)
            }
            _ => None,
        }
    }

    pub fn var_id(&self, index: usize) -> VariableId {
        let n = self.n_actors;
        if index < self.n_links() {
            let from = index / (n - 1);
            let r = index % (n - 1);
            VariableId::Link { from, to: if r < from { r } else { r + 1 } }
        } else {
            let k = index - self.n_links();
            VariableId::Attribute { attr: k / n, actor: k % n }
        }
    }

    pub fn variables(&self) -> Vec<VariableId> {
        (0..self.n_variables()).map(|i| self.var_id(i)).collect()
    }

    pub fn spaces(&self) -> Vec<StateSpace> {
        let mut s = vec![StateSpace::BINARY; self.n_links()];
        for a in &self.attributes {
            s.extend(std::iter::repeat_n(a.space(), self.n_actors));
        }
        s
    }

    /// Human-readable names of the network and attribute effects, in `β` order.
    pub fn effect_labels(&self) -> (Vec<String>, Vec<String>) {
        let net = self.network_effects().map(|e| e.kind.label().to_string()).collect();
        let attr = self
            .attribute_effects()
            .map(|e| match e.target {
                Target::Attribute(h) if self.attributes.len() > 1 => {
                    format!("{} ({})", e.kind.label(), self.attributes[h].name)
                }
                _ => e.kind.label().to_string(),
            })
            .collect();
        (net, attr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ModelSpec {
        ModelSpec {
            n_actors: 4,
            attributes: vec![AttributeDecl::new("z", 1, 5)],
            effects: vec![
                EffectSpec::network(EffectKind::Density),
                EffectSpec::network(EffectKind::Similarity),
                EffectSpec::attribute(0, EffectKind::Tendency),
            ],
        }
    }

    #[test]
    fn index_layout_round_trips_and_is_ordered() {
        let s = spec();
        let vars = s.variables();
        for (i, v) in vars.iter().enumerate() {
            assert_eq!(s.var_index(*v), Some(i));
        }
        let mut sorted = vars.clone();
        sorted.sort();
        assert_eq!(sorted, vars);
        assert_eq!(vars.len(), 12 + 4);
    }

    #[test]
    fn validation() {
        spec().validate().unwrap();
        let mut bad = spec();
        bad.effects.push(EffectSpec::network(EffectKind::Tendency));
        assert!(bad.validate().is_err());
        let mut bad = spec();
        bad.effects.push(EffectSpec::attribute(0, EffectKind::Popularity));
        assert!(bad.validate().is_err());
        let mut bad = spec();
        bad.attributes[0].max = 1;
        assert!(bad.validate().is_err());
        let mut two = spec();
        two.attributes.push(AttributeDecl::new("w", 0, 1));
        assert!(two.validate().is_err(), "similarity attribute is ambiguous with two attributes");
    }
}
