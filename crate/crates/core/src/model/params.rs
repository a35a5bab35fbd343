use serde::{Deserialize, Serialize};

use super::spec::{ModelSpec, ResolvedEffect};
use crate::error::{Error, Result};

/// A rate parameter, either shared by all actors or given per actor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Shared(f64),
    PerActor(Vec<f64>),
}

impl Rates {
    pub fn get(&self, actor: usize) -> f64 {
        match self {
            Rates::Shared(r) => *r,
            Rates::PerActor(v) => v[actor],
        }
    }

    pub fn is_shared(&self) -> bool {
        matches!(self, Rates::Shared(_))
    }

    pub fn sum(&self, n_actors: usize) -> f64 {
        match self {
            Rates::Shared(r) => r * n_actors as f64,
            Rates::PerActor(v) => v.iter().sum(),
        }
    }

    fn validate(&self, n_actors: usize, what: &str) -> Result<()> {
        let ok = match self {
            Rates::Shared(r) => r.is_finite() && *r >= 0.0,
            Rates::PerActor(v) => v.len() == n_actors && v.iter().all(|r| r.is_finite() && *r >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("{what} rates must be {n_actors} finite values >= 0")))
        }
    }
}

/// `α = (λⁿ, λᵃ, βⁿ, βᵃ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda_network: Rates,
    pub lambda_attribute: Rates,
    pub beta_network: Vec<f64>,
    pub beta_attribute: Vec<f64>,
}

impl ModelParams {
    /// Shared rates and zero weights sized for `spec`.
    pub fn neutral(spec: &ModelSpec, lambda_network: f64, lambda_attribute: f64) -> Self {
        Self {
            lambda_network: Rates::Shared(lambda_network),
            lambda_attribute: Rates::Shared(lambda_attribute),
            beta_network: vec![0.0; spec.n_network_effects()],
            beta_attribute: vec![0.0; spec.n_attribute_effects()],
        }
    }
}

/// A validated model specification together with parameter values.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    params: ModelParams,
    pub(crate) net: Vec<ResolvedEffect>,
    pub(crate) attr: Vec<Vec<ResolvedEffect>>,
}

impl Model {
    pub fn new(spec: ModelSpec, params: ModelParams) -> Result<Self> {
        spec.validate()?;
        params.lambda_network.validate(spec.n_actors, "network")?;
        params.lambda_attribute.validate(spec.n_actors, "attribute")?;
        if params.beta_network.len() != spec.n_network_effects() {
            return Err(Error::InvalidModel(format!(
                "{} network weights for {} network effects",
                params.beta_network.len(),
                spec.n_network_effects()
            )));
        }
        if params.beta_attribute.len() != spec.n_attribute_effects() {
            return Err(Error::InvalidModel(format!(
                "{} attribute weights for {} attribute effects",
                params.beta_attribute.len(),
                spec.n_attribute_effects()
            )));
        }
        if params.beta_network.iter().chain(&params.beta_attribute).any(|b| !b.is_finite()) {
            return Err(Error::InvalidModel("effect weights must be finite".into()));
        }
        let net = spec.resolved_network();
        let attr = spec.resolved_attribute();
        Ok(Self { spec, params, net, attr })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n_actors(&self) -> usize {
        self.spec.n_actors
    }

    pub fn n_attributes(&self) -> usize {
        self.spec.attributes.len()
    }

    pub fn with_params(&self, params: ModelParams) -> Result<Self> {
        Self::new(self.spec.clone(), params)
    }

    pub fn lambda_network(&self, i: usize) -> f64 {
        self.params.lambda_network.get(i)
    }

    pub fn lambda_attribute(&self, i: usize) -> f64 {
        self.params.lambda_attribute.get(i)
    }

    /// Total exit rate of the full process, `Σ_i (λᵢⁿ + H·λᵢᵃ)`. Constant in
    /// the state because every decision clock always moves something.
    pub fn total_rate(&self) -> f64 {
        let n = self.n_actors();
        self.params.lambda_network.sum(n) + self.n_attributes() as f64 * self.params.lambda_attribute.sum(n)
    }

    pub(crate) fn has_network(&self, kind: super::EffectKind) -> bool {
        self.net.iter().any(|e| e.kind == kind)
    }

    pub(crate) fn network_similarity_on(&self, h: usize) -> bool {
        self.net.iter().any(|e| e.kind == super::EffectKind::Similarity && e.attr == h)
    }

    /// True when attribute `h`'s utility contains a similarity term on `h`
    /// itself (the only attribute effect whose change depends on the network).
    pub(crate) fn attribute_self_similarity(&self, h: usize) -> bool {
        self.attr[h].iter().any(|e| e.kind == super::EffectKind::Similarity && e.attr == h)
    }
}
